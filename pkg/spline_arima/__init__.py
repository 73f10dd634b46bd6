"""
Entrypoint for spline_arima.
"""

import sys

import singer
from singer import utils

from spline_arima import cli
from spline_arima.errors import (SplineArimaError, format_error_message,
                                 get_exit_code_for_exception)

LOGGER = singer.get_logger()


@utils.handle_top_exception(LOGGER)
def main():
    """
    Entrypoint function for the command line.
    """
    try:
        cli.run()
    except SplineArimaError as error:
        LOGGER.critical(format_error_message(error))
        sys.exit(get_exit_code_for_exception(error))


if __name__ == "__main__":
    main()
