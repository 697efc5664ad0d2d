"""
Shared plumbing of the hmvp management commands: the --threads and
--output-dir flags, the run manifest and the exit codes

    0 success, 1 checks ran but failed, 2 invalid input,
    3 solver non-convergence.
"""

import logging
import time
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ..artifacts import RunManifest, write_json
from ..exceptions import ConvergenceError, HmvpError
from ..parallel import resolve_threads

logger = logging.getLogger(__name__)

EXIT_FAILED_CHECKS = 1
EXIT_INVALID_INPUT = 2
EXIT_NO_CONVERGENCE = 3

# Options every Django command has; they are not run parameters.
_DJANGO_OPTIONS = {'verbosity', 'settings', 'pythonpath', 'traceback',
                   'no_color', 'force_color', 'skip_checks', 'stdout',
                   'stderr'}


class InvalidInput(Exception):
    """
    Raised by a command when its form does not validate.
    """


class HmvpCommand(BaseCommand):
    """
    Subclasses implement ``add_command_arguments`` and ``run``; ``run``
    returns True when every check passed.
    """

    def add_arguments(self, parser):
        self.add_command_arguments(parser)
        parser.add_argument('--threads', type=int, default=None,
                            help='Worker threads (HMVP_THREADS overrides).')
        parser.add_argument('--output-dir', default=None,
                            help='Directory for the CSV/JSON artifacts.')

    def add_command_arguments(self, parser):
        pass

    @property
    def command_name(self):
        return type(self).__module__.rsplit('.', 1)[-1]

    def validate(self, form):
        """
        :returns: the cleaned data of a valid form
        :raises InvalidInput: with the form errors as plain text
        """
        if not form.is_valid():
            lines = []
            for name, errors in form.errors.get_json_data().items():
                lines.append(f'* {name}')
                lines.extend(f'  * {error["message"]}' for error in errors)
            raise InvalidInput('\n'.join(lines))
        return form.cleaned_data

    def output_path(self, name):
        path = self.output_dir / f'{self.command_name}-{name}'
        self.manifest.add_output(path)
        return path

    def handle(self, *args, **options):
        if options['verbosity'] >= 3:
            logging.getLogger('mvp').setLevel(logging.DEBUG)
        self.threads = resolve_threads(options['threads'])
        self.output_dir = Path(options['output_dir']
                               or settings.HMVP_OUTPUT_DIR)
        parameters = {k: v for k, v in options.items()
                      if k not in _DJANGO_OPTIONS}
        self.manifest = RunManifest(self.command_name, parameters)
        start = time.perf_counter()
        message = None
        try:
            passed = self.run(**options)
            code = 0 if passed else EXIT_FAILED_CHECKS
            if not passed:
                message = 'Some checks failed.'
        except InvalidInput as exc:
            code, message = EXIT_INVALID_INPUT, str(exc)
        except ConvergenceError as exc:
            code, message = EXIT_NO_CONVERGENCE, str(exc)
            write_json(exc.diagnostics, self.output_path('diagnostics.json'))
        except HmvpError as exc:
            code, message = EXIT_INVALID_INPUT, str(exc)
        self.manifest.wall_time = time.perf_counter() - start
        self.manifest.exit_code = code
        path = self.manifest.write(self.output_dir)
        logger.info('%s finished with exit code %s in %.2fs, manifest %s',
                    self.command_name, code, self.manifest.wall_time, path)
        if code:
            raise CommandError(message, returncode=code)
        self.stdout.write(self.style.SUCCESS(f'OK. Manifest: {path}'))

    def run(self, **options):
        raise NotImplementedError('subclasses of HmvpCommand must provide '
                                  'a run() method')
