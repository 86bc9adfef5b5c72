"""Utility module for style-related functionality"""

from tqdm import tqdm

BAR_FORMAT = '{l_bar}{bar:30}{r_bar}{bar:-30b}'


class print_style:
    BOLD = '\033[1m'
    GREEN = '\033[92m'
    RED = '\033[91m'
    END = '\033[0m'


def print_result(succeeded: bool = True):

    if succeeded is True:
        print(print_style.GREEN + "OK" + print_style.END)
    elif succeeded is False:
        print(print_style.RED + "FAIL" + print_style.END)
    else:
        raise ValueError("Parameter 'succeeded' should be a boolean")

    return


def print_header(message: str):
    print(print_style.BOLD + message + print_style.END)


def print_property(name: str, passed: bool):
    """Single selftest line: property name and its pass/fail status."""

    print(f"{name:<40}", end="", flush=True)
    print_result(passed)


def progress(iterable, verbose: bool = True, desc: str = None):
    """
    This function wraps an iterable in the shared tqdm progress bar
    when verbose, and returns it unchanged otherwise.
    """

    if not verbose:
        return iterable

    return tqdm(iterable, ascii=True, desc=desc, bar_format=BAR_FORMAT)
