from pathlib import Path

from ...artifacts import write_csv, write_json
from ...dpp_solver import SolverConfig, SpaceTimeGrid, error_report, solve
from ...forms import SolveConfigForm
from ...horizontal_calculus import format_exponent
from ...mvp_operators import MvpParams
from ..base import HmvpCommand, InvalidInput


class Command(HmvpCommand):
    help = ('Solves the normalized parabolic p-sub-Laplace equation on a '
            'gauge ball cylinder with the mean value update.')

    def add_command_arguments(self, parser):
        parser.add_argument('config', help='Path of a key = value config file.')

    def run(self, **options):
        try:
            text = Path(options['config']).read_text(encoding='utf-8')
        except OSError as exc:
            raise InvalidInput(f"Can not read config: {exc}") from None
        data = self.validate(SolveConfigForm.from_text(text))

        params = MvpParams(data['n'], data['p'], data['eps'])
        grid = SpaceTimeGrid.build(
            data['n'], data['eps'], data['domain_radius'], data['T'],
            delta_t=data['delta_t'], collar=data['collar'],
            horizontal_ratio=data['horizontal_ratio'],
            vertical_ratio=data['vertical_ratio'])
        tuning = {name: data[name] for name in
                  ('fp_tolerance', 'max_inner_iters') if data[name]}
        config = SolverConfig(params, interpolation=data['interpolation'],
                              **tuning)
        self.stdout.write(f"p={format_exponent(params.p)} eps={params.epsilon} "
                          f"alpha={params.alpha:.6g} beta={params.beta:.6g} "
                          f"nodes={grid.size} slabs={grid.slab_count}")

        result = solve(grid, config, data['initial_field'],
                       data['lateral_field'], self.threads)
        write_csv(result.to_rows(data['export_every']),
                  self.output_path('field.csv'),
                  columns=['k', 't'] + [f'x{i + 1}' for i in
                                        range(2 * grid.n + 1)]
                  + ['value', 'provenance'])
        summary = {'params': params.as_dict(), 'grid': grid.stats(),
                   'config': {'fp_tolerance': config.fp_tolerance,
                              'max_inner_iters': config.max_inner_iters,
                              'interpolation': config.interpolation,
                              'vertical_nodes': config.vertical_nodes},
                   'convergence': result.convergence}

        if data['reference_field'] is not None:
            errors = error_report(result, data['reference_field'])
            write_csv((vars(e) for e in errors),
                      self.output_path('errors.csv'),
                      columns=['k', 't', 'max_error', 'l2_error'])
            summary['errors'] = {'reference': data['reference'],
                                 'max_error': max(e.max_error for e in errors),
                                 'final': vars(errors[-1])}
            self.stdout.write(f"max error against {data['reference']}: "
                              f"{summary['errors']['max_error']:.6e}")
        write_json(summary, self.output_path('summary.json'))
        return True
