import math

from django import forms
from django.conf import settings

from .exceptions import HmvpError
from .fields import resolve_field
from .horizontal_calculus import parse_exponent


##############################
#        Form fields
#############################


class ExponentField(forms.CharField):
    """
    The exponent p: a number > 1 or one of the infinity literals.
    """

    def to_python(self, value):
        value = super().to_python(value)
        if value in self.empty_values:
            return None
        try:
            return parse_exponent(value)
        except HmvpError as exc:
            raise forms.ValidationError(str(exc), code='invalid')


class FloatListField(forms.CharField):
    """
    Comma separated list of floats, e.g. ``0.4,0.2,0.1``.
    """
    item_name = 'number'

    def __init__(self, *args, min_items=None, max_items=None, **kwargs):
        self.min_items = min_items
        self.max_items = max_items
        super().__init__(*args, **kwargs)

    def convert(self, text):
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(text)
        return value

    def to_python(self, value):
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            value = super().to_python(value)
            if value in self.empty_values:
                return None
            items = [v for v in value.replace(' ', '').split(',')]
        try:
            result = [self.convert(v) for v in items]
        except (TypeError, ValueError):
            raise forms.ValidationError(
                f"Expected a comma separated list of {self.item_name}s, "
                f"got '{value}'.", code='invalid')
        if self.min_items is not None and len(result) < self.min_items:
            raise forms.ValidationError(
                f"At least {self.min_items} values are needed.",
                code='min_items')
        if self.max_items is not None and len(result) > self.max_items:
            raise forms.ValidationError(
                f"At most {self.max_items} values are allowed.",
                code='max_items')
        return result


class IntegerListField(FloatListField):
    item_name = 'integer'

    def convert(self, text):
        value = float(text)
        if not value.is_integer():
            raise ValueError(text)
        return int(value)


class ExponentListField(FloatListField):
    item_name = 'exponent'

    def convert(self, text):
        try:
            return parse_exponent(text)
        except HmvpError:
            raise ValueError(text) from None


class SpaceTimePointField(FloatListField):
    """
    ``t,x1,...,x{2n+1}``; the length is checked by the form, which knows n.
    """
    item_name = 'coordinate'


##############################
#        Command forms
#############################


class GroupIndexMixin:
    """
    Shared validation of the group index n.
    """

    def clean_n(self):
        n = self.cleaned_data['n']
        if isinstance(n, list):
            bad = [v for v in n if v < 1]
        else:
            bad = [n] if n is not None and n < 1 else []
        if bad:
            raise forms.ValidationError(
                f"The group index n must be >= 1, got {bad[0]}.")
        return n


class ConstantsForm(GroupIndexMixin, forms.Form):
    """
    Input of the constants command: the n values and the p values of
    the (alpha, beta) table.
    """
    n = IntegerListField(label='Group indices', min_items=1)
    p = ExponentListField(label='Exponents', required=False)

    def clean_p(self):
        p = self.cleaned_data['p']
        return p if p else [2.0, 4.0, parse_exponent('inf')]


class MomentsForm(GroupIndexMixin, forms.Form):
    n = forms.IntegerField(label='Group index')
    eps = forms.FloatField(label='Ball radius')
    resolution = IntegerListField(label='Resolution', required=False)
    mc_samples = forms.IntegerField(label='Monte Carlo samples',
                                    required=False, min_value=0)
    seed = forms.IntegerField(label='Seed', required=False, min_value=0)

    def clean_eps(self):
        eps = self.cleaned_data['eps']
        if not (eps > 0 and eps != float('inf')):
            raise forms.ValidationError(
                settings.ERR_MSG_NON_POSITIVE.format('eps', eps))
        return eps

    def clean_resolution(self):
        """
        Only the count values are checked here; their number depends on n
        and is checked when the rule is built.
        """
        resolution = self.cleaned_data['resolution']
        if resolution and any(c < 2 for c in resolution):
            raise forms.ValidationError(
                settings.ERR_MSG_BAD_RESOLUTION.format(tuple(resolution)))
        return tuple(resolution) if resolution else None


class LadderMixin:
    """
    Validation of an eps ladder: >= 3 positive, strictly decreasing values.
    """

    def clean_eps(self):
        ladder = self.cleaned_data['eps']
        if not ladder:
            return list(settings.HMVP_DEFAULT_EPS_LADDER)
        if len(ladder) < 3:
            raise forms.ValidationError(
                settings.ERR_MSG_SHORT_LADDER.format(len(ladder)))
        if any(e <= 0 for e in ladder) or any(
                b >= a for a, b in zip(ladder, ladder[1:])):
            raise forms.ValidationError(settings.ERR_MSG_LADDER_ORDER)
        return ladder


class ExpandForm(LadderMixin, GroupIndexMixin, forms.Form):
    field = forms.CharField(label='Field', max_length=500)
    n = forms.IntegerField(label='Group index', required=False)
    p = ExponentField(label='Exponent', required=False)
    eps = FloatListField(label='Eps ladder', required=False)
    at = SpaceTimePointField(label='Space-time point', required=False)
    window_scale = forms.FloatField(label='Time window scale',
                                    required=False)
    stationary = forms.BooleanField(required=False)

    def clean_window_scale(self):
        scale = self.cleaned_data['window_scale']
        if scale is None:
            return 1.0
        if not scale > 0:
            raise forms.ValidationError(
                settings.ERR_MSG_NON_POSITIVE.format('window_scale', scale))
        return scale

    def clean(self):
        """
        Resolves the field id against n and checks the length of the
        point, which both need n.
        """
        cleaned_data = super().clean()
        n = cleaned_data.get('n') or 1
        cleaned_data['n'] = n
        if cleaned_data.get('p') is None and 'p' not in self.errors:
            cleaned_data['p'] = 2.0
        if 'field' in cleaned_data:
            try:
                cleaned_data['u'] = resolve_field(cleaned_data['field'], n)
            except HmvpError as exc:
                self.add_error('field', str(exc))
        if 'at' not in self.errors:
            at = cleaned_data.get('at')
            if at is None:
                at = [0.0] * (2 * n + 2)
            cleaned_data['at'] = at
            if len(at) != 2 * n + 2:
                self.add_error('at', f"Expected t and {2 * n + 1} "
                                     f"coordinates, got {len(at)} values.")
        return cleaned_data


class CounterexampleForm(LadderMixin, forms.Form):
    eps = FloatListField(label='Eps ladder', required=False)
    samples = forms.IntegerField(label='Random jet samples', required=False,
                                 min_value=1)
    seed = forms.IntegerField(label='Seed', required=False, min_value=0)


##############################
#     Solver config file
#############################


def parse_config(text):
    """
    Reads ``key = value`` lines; blank lines and ``#`` comments are
    skipped. A repeated key or a line without '=' is an error.

    :returns: (dict of raw values, list of error messages)
    """
    data = {}
    errors = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep or not key:
            errors.append(f"Line {number}: expected 'key = value'.")
            continue
        if key in data:
            errors.append(f"Line {number}: '{key}' is given twice.")
            continue
        data[key] = value.strip()
    return data, errors


class SolveConfigForm(GroupIndexMixin, forms.Form):
    """
    The solver config file. Every key not declared below is rejected.
    """
    n = forms.IntegerField(required=False)
    p = ExponentField(required=False)
    eps = forms.FloatField()
    delta_t = forms.FloatField(required=False)
    domain_radius = forms.FloatField(required=False)
    T = forms.FloatField(required=False)
    collar = forms.FloatField(error_messages={
        'required': 'Invalid grid: the collar width is required.'})
    initial = forms.CharField(max_length=500)
    lateral = forms.CharField(max_length=500, required=False)
    reference = forms.CharField(max_length=500, required=False)
    fp_tolerance = forms.FloatField(required=False)
    max_inner_iters = forms.IntegerField(required=False, min_value=1)
    interpolation = forms.ChoiceField(
        required=False, choices=(('multilinear', 'multilinear'),
                                 ('nearest', 'nearest')))
    horizontal_ratio = forms.FloatField(required=False)
    vertical_ratio = forms.FloatField(required=False)
    export_every = forms.IntegerField(required=False, min_value=1)

    POSITIVE = ('eps', 'delta_t', 'domain_radius', 'T', 'collar',
                'fp_tolerance', 'horizontal_ratio', 'vertical_ratio')
    DEFAULTS = {'n': 1, 'p': 2.0, 'domain_radius': 1.0, 'T': 0.2,
                'interpolation': 'multilinear', 'export_every': 1}

    @classmethod
    def from_text(cls, text):
        data, errors = parse_config(text)
        form = cls(data)
        form.syntax_errors = errors
        return form

    def clean(self):
        cleaned_data = super().clean()
        for line_error in getattr(self, 'syntax_errors', []):
            self.add_error(None, line_error)
        unknown = sorted(set(self.data) - set(self.fields))
        if unknown:
            self.add_error(None, f"Unknown config keys: {', '.join(unknown)}.")
        for name in self.POSITIVE:
            value = cleaned_data.get(name)
            if value is not None and not (0 < value < float('inf')):
                self.add_error(name, settings.ERR_MSG_NON_POSITIVE.format(
                    name, value))
        for name, default in self.DEFAULTS.items():
            if cleaned_data.get(name) in (None, ''):
                cleaned_data[name] = default
        n = cleaned_data['n']
        for name in ('initial', 'lateral', 'reference'):
            identifier = cleaned_data.get(name)
            cleaned_data[f'{name}_field'] = None
            if not identifier:
                continue
            try:
                cleaned_data[f'{name}_field'] = resolve_field(identifier, n)
            except HmvpError as exc:
                self.add_error(name, str(exc))
        # lateral data default to the initial data
        if not cleaned_data.get('lateral'):
            cleaned_data['lateral_field'] = cleaned_data['initial_field']
        return cleaned_data
