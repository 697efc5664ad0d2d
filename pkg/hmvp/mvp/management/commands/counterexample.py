from ...artifacts import write_csv, write_json
from ...forms import CounterexampleForm
from ...mvp_operators import counterexample_report
from ..base import HmvpCommand


class Command(HmvpCommand):
    help = ('Shows that the weighted space-time mean of a caloric function '
            'with the window (pi/12) eps^2 does not reproduce its value.')

    def add_command_arguments(self, parser):
        parser.add_argument('--eps', default=None,
                            help='Strictly decreasing eps ladder.')
        parser.add_argument('--samples', default='8',
                            help='Random points for the heat equation check.')
        parser.add_argument('--seed', default='0')

    def run(self, **options):
        data = self.validate(CounterexampleForm({
            'eps': options['eps'], 'samples': options['samples'],
            'seed': options['seed']}))
        report = counterexample_report(data['eps'], data['samples'] or 8,
                                       data['seed'] or 0)
        self.stdout.write(f'spatial mean:  {report.spatial_oracle}')
        self.stdout.write(f'time average:  {report.average_oracle}')
        for row in report.rows:
            self.stdout.write(f"  eps={row['eps']:<8g} "
                              f"deviation={row['deviation']: .6e} "
                              f"oracle={row['oracle_deviation']: .6e}")
        for name, ok in report.checks.items():
            style = self.style.SUCCESS if ok else self.style.ERROR
            self.stdout.write(style(f'{name:<26} {"pass" if ok else "FAIL"}'))
        write_csv(report.rows, self.output_path('rows.csv'))
        write_json(report, self.output_path('report.json'))
        return report.passed()
