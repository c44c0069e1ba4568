# Source-tree shim: with the project root on sys.path this directory shadows the
# installed package, so submodule lookups are pointed at src/lifi_commons/.
from pathlib import Path

__path__ = [str(Path(__file__).resolve().parent / "src" / "lifi_commons")]
__version__ = "0.1.0"
