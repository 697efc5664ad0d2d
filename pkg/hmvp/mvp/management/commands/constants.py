from ...artifacts import write_csv, write_json
from ...ball_quadrature import M_constant, M_constant_exact
from ...forms import ConstantsForm
from ...horizontal_calculus import format_exponent
from ...mvp_operators import alpha_beta
from ..base import HmvpCommand


class Command(HmvpCommand):
    help = 'Prints M(n) and the (alpha, beta) weights of the mean value blend.'

    def add_command_arguments(self, parser):
        parser.add_argument('--n', default='1',
                            help='Comma separated group indices.')
        parser.add_argument('--p', default=None,
                            help='Comma separated exponents, inf allowed '
                                 '(default 2,4,inf).')

    def run(self, **options):
        data = self.validate(ConstantsForm(
            {'n': options['n'], 'p': options['p']}))
        rows = []
        summary = []
        for n in data['n']:
            M = M_constant(n)
            exact = M_constant_exact(n)
            summary.append({'n': n, 'M': M, 'M_exact': str(exact)})
            self.stdout.write(f'n={n}  M(n)={M:.12g}  ({exact})')
            for p in data['p']:
                alpha, beta = alpha_beta(p, n)
                rows.append({'n': n, 'p': format_exponent(p), 'M': M,
                             'alpha': alpha, 'beta': beta})
                self.stdout.write(f'    p={format_exponent(p):<8} '
                                  f'alpha={alpha:.12g}  beta={beta:.12g}')
        write_csv(rows, self.output_path('table.csv'),
                  columns=['n', 'p', 'M', 'alpha', 'beta'])
        write_json(summary, self.output_path('constants.json'))
        return True
