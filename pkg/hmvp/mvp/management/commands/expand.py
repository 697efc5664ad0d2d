import numpy as np

from ...artifacts import write_csv, write_json
from ...forms import ExpandForm
from ...horizontal_calculus import format_exponent
from ...mvp_operators import expansion_study
from ..base import HmvpCommand


class Command(HmvpCommand):
    help = ('Measures how fast the mean value blend minus its second order '
            'prediction vanishes along an eps ladder.')

    def add_command_arguments(self, parser):
        parser.add_argument('--field', required=True,
                            help='Built-in field name or a polynomial in '
                                 't, x1, ..., x{2n+1}.')
        parser.add_argument('--n', default='1')
        parser.add_argument('--p', default='2')
        parser.add_argument('--eps', default=None,
                            help='Strictly decreasing eps ladder, e.g. '
                                 '0.4,0.2,0.1,0.05.')
        parser.add_argument('--at', default=None,
                            help='Space-time point t,x1,...,x{2n+1} '
                                 '(default: the origin at t = 0).')
        parser.add_argument('--window-scale', default=None,
                            help='c in the time window [t - c eps^2, t].')
        parser.add_argument('--stationary', action='store_true',
                            help='Use the operators without time average.')

    def run(self, **options):
        data = self.validate(ExpandForm({
            'field': options['field'], 'n': options['n'],
            'p': options['p'], 'eps': options['eps'], 'at': options['at'],
            'window_scale': options['window_scale'],
            'stationary': options['stationary']}))
        t, x = data['at'][0], np.array(data['at'][1:])
        report, rows = expansion_study(
            data['u'], t, x, data['n'], data['p'], data['eps'],
            data['window_scale'], data['stationary'])

        self.stdout.write(f"{data['field']} on H^{data['n']}, "
                          f"p={format_exponent(data['p'])}, t={t}, x={x}")
        for row in rows:
            self.stdout.write(f"  eps={row['eps']:<8g} "
                              f"residual={row['residual']: .6e}")
        passed = report.passed()
        style = self.style.SUCCESS if passed else self.style.ERROR
        self.stdout.write(style(f'fitted order {report.fitted_order:.4f}'))
        write_csv(rows, self.output_path('residuals.csv'),
                  columns=['eps', 'residual', 'predicted_term', 'value',
                           'operator_value'])
        write_json({'field': data['field'], 'n': data['n'],
                    'p': format_exponent(data['p']), 'at': data['at'],
                    'window_scale': data['window_scale'],
                    'stationary': data['stationary'],
                    'report': report, 'passed': passed},
                   self.output_path('report.json'))
        return passed
