import logging
import os
from typing import Optional

from tqdm import tqdm

LOG_FORMAT = "%(asctime)s,%(msecs)03d %(levelname)-8s [%(filename)s:%(lineno)d] %(message)s"
LOG_FILE = "nopast.log"


class TqdmHandler(logging.StreamHandler):
    """Writes records above the progress bar instead of through it."""

    def emit(self, record):
        try:
            tqdm.write(self.format(record), file=self.stream)
            self.flush()
        except Exception:
            self.handleError(record)


def setup(debug_mode=False, out: Optional[str] = None):
    """Streams logs to stderr, and to `out`/nopast.log when `out` is given
    Args:
        debug_mode (bool): a boolean to enable verbose logs
        out (str): experiment directory that also keeps a copy of the log
    """
    formatter = logging.Formatter(LOG_FORMAT)
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if debug_mode else logging.INFO)
    for handler in list(root.handlers):
        if getattr(handler, "_nopast", False):
            root.removeHandler(handler)
            handler.close()

    handlers = [TqdmHandler()]
    if out is not None:
        os.makedirs(out, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(out, LOG_FILE)))
    for handler in handlers:
        handler._nopast = True
        handler.setFormatter(formatter)
        root.addHandler(handler)

    if debug_mode:
        logging.debug("Verbose logging enabled")
        logging.getLogger("matplotlib").setLevel(logging.ERROR)
