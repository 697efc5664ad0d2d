from ...artifacts import write_json
from ...ball_quadrature import build_rule, lebesgue_ball_volume, \
    moment_check, monte_carlo_volume, volume_error_estimate, \
    weighted_ball_volume
from ...forms import MomentsForm
from ..base import HmvpCommand

# relative tolerance of the Monte Carlo volume oracle
MC_TOLERANCE = 0.01


class Command(HmvpCommand):
    help = ('Checks the psi-weighted moment identities of the gauge ball '
            'and the constant M(n).')

    def add_command_arguments(self, parser):
        parser.add_argument('--n', default='1')
        parser.add_argument('--eps', default='1')
        parser.add_argument('--resolution', default=None,
                            help='n_rho,n_phi,n_theta or one count per '
                                 'polar variable.')
        parser.add_argument('--mc-samples', default=None,
                            help='Adds a Monte Carlo check of the volume.')
        parser.add_argument('--seed', default='0')

    def run(self, **options):
        data = self.validate(MomentsForm({
            'n': options['n'], 'eps': options['eps'],
            'resolution': options['resolution'],
            'mc_samples': options['mc_samples'], 'seed': options['seed']}))
        n, eps = data['n'], data['eps']
        rule = build_rule(n, eps, data['resolution'])
        report = moment_check(n, eps, rule)
        checks = report.checks()

        estimate, error = volume_error_estimate(n, eps, rule.resolution)
        exact = weighted_ball_volume(n, eps)
        volume = {'weighted_volume': estimate, 'weighted_volume_error': error,
                  'weighted_volume_exact': exact,
                  'lebesgue_volume': rule.volume,
                  'lebesgue_volume_exact': lebesgue_ball_volume(n, eps)}
        checks['weighted_volume'] = abs(estimate - exact) <= max(
            error, 1e-10 * exact)
        if data['mc_samples']:
            mc = monte_carlo_volume(n, eps, data['mc_samples'],
                                    data['seed'] or 0, threads=self.threads)
            volume['monte_carlo_volume'] = mc
            checks['monte_carlo_volume'] = abs(mc - rule.volume) \
                <= MC_TOLERANCE * rule.volume

        for name, value in report.as_dict().items():
            self.stdout.write(f'{name:<18} {value}')
        for name, ok in checks.items():
            style = self.style.SUCCESS if ok else self.style.ERROR
            self.stdout.write(style(f'{name:<18} {"pass" if ok else "FAIL"}'))
        write_json({'report': report, 'resolution': rule.resolution,
                    'nodes': rule.size, 'volume': volume, 'checks': checks,
                    'passed': all(checks.values())},
                   self.output_path('report.json'))
        return all(checks.values())
