"""
Settings access for ghlab modules
"""

# Import settings with fallback
try:
    from config.settings import settings
except ImportError:
    import sys
    from pathlib import Path
    config_path = Path(__file__).parent.parent.parent / "config"
    sys.path.append(str(config_path))
    from settings import settings

__all__ = ["settings"]
