"""AGM robustness and incremental interval monitoring."""
