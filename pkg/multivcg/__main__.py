#! /usr/bin/env python
#
#   Copyright (C) 2024 The multivcg developers.
#
#   This program is free software: you can redistribute it and/or modify
#   it under the terms of the GNU General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#   (at your option) any later version.
#
#   This program is distributed in the hope that it will be useful,
#   but WITHOUT ANY WARRANTY; without even the implied warranty of
#   MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#   GNU General Public License for more details.
#
#   You should have received a copy of the GNU General Public License
#   along with this program.  If not, see <http://www.gnu.org/licenses/>.
#
from __future__ import print_function
from __future__ import absolute_import

# stdlib imports
import logging
import sys
import warnings

# 3rd party imports
import cli.app
import coloredlogs

# multivcg imports
from multivcg import __version__, log, utils
from multivcg.conf import DEFAULT_CONFIG_FILE
from multivcg.exceptions import (
    ConfigurationError,
    OracleMismatch,
    VerificationFailed,
)
from multivcg.subcommands import Auction, Bench, Gen, Verify


EX_USAGE = 2
"""
Exit code for invalid command-line flags or configuration.
"""


class MultiVCG(cli.app.CommandLineApp):
    name = "multivcg"
    description = ("Exact VCG auctions of multiple units of multiple resources,"
                   " with dataset generation, benchmarks and self-checks.")

    def setup(self):
        cli.app.CommandLineApp.setup(self)

        # Global parameters
        self.add_param('-v', '--verbose', action='count', default=0,
                       help="Increase verbosity. If at least four `-v` option "
                       "are given, log messages from all used Python modules.")
        self.add_param('-c', '--config', metavar='PATH', default=None,
                       help=("Path to the configuration file;"
                             " default: `{0}`."
                             " If directory `PATH.d` exists,"
                             " all files matching"
                             " pattern `PATH.d/*.conf` are parsed."
                             .format(DEFAULT_CONFIG_FILE)))
        self.add_param('--version', action='store_true',
                       help="Print version information and exit.")

        # all commands in this list will be added to the subcommands;
        # they must implement the `AbstractCommand` contract
        commands = [Gen(self.params),
                    Auction(self.params),
                    Bench(self.params),
                    Verify(self.params),
                    ]

        self.subparsers = self.argparser.add_subparsers(
            title="COMMANDS", dest='command',
            help=("Available commands. Run `multivcg CMD --help`"
                  " to have information on command `CMD`."))
        self.subparsers.required = True

        for command in commands:
            command.setup(self.subparsers)

    def pre_run(self):
        # `--version` must work without a subcommand
        if "--version" in sys.argv:
            print("multivcg version %s" % __version__)
            sys.exit(0)

        cli.app.CommandLineApp.pre_run(self)

        # print *all* Python warnings through the logging subsystem
        warnings.resetwarnings()
        warnings.simplefilter('once')
        utils.redirect_warnings(logger='multivcg')

        # Set verbosity level
        if self.params.verbose < 4:
            logger = log  # 'multivcg'
        else:
            # when *very* verbose, print *all* log messages
            # (including ones from dependent modules)
            logger = logging.getLogger()

        loglevel = max(logging.DEBUG, logging.WARNING - 10 * max(0, self.params.verbose))
        coloredlogs.install(logger=logger, level=loglevel)
        logger.setLevel(loglevel)

        assert self.params.func, "No subcommand defined in `MultiVCG.setup()`"
        try:
            self.params.func.pre_run()
        except ConfigurationError as ex:
            sys.stderr.write(str(ex).strip())
            sys.stderr.write('\n')
            sys.exit(EX_USAGE)

    def main(self):
        """
        Run the subcommand selected on the command line.

        Configuration errors exit with code 2; failed checks and any
        other error exit with code 1.
        """
        assert self.params.func, "No subcommand defined in `MultiVCG.main()`"
        try:
            return self.params.func()
        except ConfigurationError as err:
            log.error("Error: %s", err)
            sys.exit(EX_USAGE)
        except OracleMismatch as err:
            log.error("Error: %s", err)
            for line in err.differences:
                print("  " + line)
            print("Aborting because of errors: {err}.".format(err=err))
            sys.exit(1)
        except VerificationFailed as err:
            log.error("Error: %s", err)
            if err.command:
                print("To reproduce, run: {0}".format(err.command))
            print("Aborting because of errors: {err}.".format(err=err))
            sys.exit(1)
        except Exception as err:
            log.error("Error: %s", err)
            if self.params.verbose > 2:
                import traceback
                traceback.print_exc()
            rows = getattr(err, 'rows', ())
            for row in rows:
                print("  " + row)
            print("Aborting because of errors: {err}.".format(err=err))
            sys.exit(1)


def main(**kwargs):
    try:
        app = MultiVCG(**kwargs)
        app.run()
    except KeyboardInterrupt:
        sys.stderr.write("""
WARNING: execution interrupted by the user!
Partial output files may have been left behind.
""")
        return 1


if __name__ == "__main__":
    main()
