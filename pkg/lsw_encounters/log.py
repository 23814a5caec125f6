import logging
import os
import threading

import colorama
from colorama import Fore

colorama.init()

_lock = threading.Lock()
_state = {'debug': False}


def setup_logging(log_file: str, debug: bool = False):
    if base_dir := os.path.dirname(log_file):
        os.makedirs(base_dir, exist_ok=True)
    logging.basicConfig(filename=log_file, level=logging.INFO,
                        format='%(asctime)s - %(message)s', filemode='a')
    set_debug(debug)


def set_debug(debug: bool):
    _state['debug'] = bool(debug)


def log(*args):
    with _lock:
        if _state['debug']:
            print(*args)
        logging.info(' '.join(map(str, args)))


def warn(*args):
    message = ' '.join(map(str, args))
    with _lock:
        print(f"{Fore.YELLOW}{message}{Fore.RESET}")
        logging.warning(message)


def error(*args, record: bool = True):
    """Print in red and log; ``record=False`` only prints, for errors raised before ``setup_logging``."""
    message = ' '.join(map(str, args))
    with _lock:
        print(f"{Fore.RED}{message}{Fore.RESET}")
        if record:
            logging.error(message)
