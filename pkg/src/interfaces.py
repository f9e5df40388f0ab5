import sys
from typing import TextIO


class ReportInterface:
    def output(self, text: str):
        raise NotImplementedError

    def diagnostic(self, text: str, error: bool = False):
        raise NotImplementedError


class TextCLI(ReportInterface):
    """Results on stdout, diagnostics on stderr."""

    def __init__(self, out: TextIO | None = None, err: TextIO | None = None):
        self.out = out or sys.stdout
        self.err = err or sys.stderr

    def output(self, text: str):
        print(text, file=self.out)

    def diagnostic(self, text: str, error: bool = False):
        if self.err.isatty():
            # Red for errors, blue for headers
            colour = "1;31" if error else "1;34"
            text = f"\033[{colour}m{text}\033[0m"
        print(text, file=self.err)
