"""
Regular expressions used by `curvint` to read loop combinations.

`gamma_term_regex` matches one signed term of an integer combination of
marked loops, such as `- 2*B1` or `+C[inf0]`. `gamma_regex` matches a
whole expression made of such terms, so that malformed input can be
rejected before its terms are read.
"""


__all__ = ['gamma_regex', 'gamma_term_regex', 'loop_name_regex']


import re


_loop_re = r'(?:[AB][1-9]\d*|C\[[A-Za-z_][\w.]*\])'

_gamma_subexprs = {
    'loop_re': _loop_re,
    'coeff_re': r'\d+ *\*? *'
}

loop_name_regex = re.compile(fr'^{_loop_re}$')

# pylint: disable=line-too-long
gamma_term_regex = re.compile((    # noqa: E131
    r' *'
    r'(?P<SIGN>[+-])?'                       # optional sign (required after the first term)
    r' *'
    r'(?P<COEFF>\d+)?'                       # optional integer coefficient...
    r'(?(COEFF) *\*? *)'                     # ...with an optional '*'
    r'(?P<LOOP>{loop_re})'                   # loop name: A<i>, B<i> or C[<label>]
    r' *'
).format_map(_gamma_subexprs))

gamma_regex = re.compile((
    r'^ *[+-]? *(?:{coeff_re})?{loop_re}'
    r'(?: *[+-] *(?:{coeff_re})?{loop_re})*'
    r' *$'
).format_map(_gamma_subexprs))
