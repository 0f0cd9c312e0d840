"""Plain-text rendering of report documents for ``--format table``.

Table output is meant for people and carries no schema guarantee; the
JSON form is the stable one.
"""
from __future__ import annotations

from typing import Any, Callable, Dict, List, Mapping, Sequence


def _cell(value: Any) -> str:
    if value is None:
        return '-'
    if isinstance(value, bool):
        return 'pass' if value else 'FAIL'
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Left-aligned columns separated by two spaces, with a dashed rule."""
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = ['  '.join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
             '  '.join('-' * w for w in widths)]
    lines += ['  '.join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return '\n'.join(lines)


def _verdict(document: Mapping[str, Any]) -> str:
    return f"result: {_cell(document.get('pass'))}"


def _amplitudes(doc: Mapping[str, Any]) -> List[str]:
    rows = [(c['name'], c['value'], c['expected'], c['pass'], c['description'])
            for c in doc['checks']]
    return [render_table(('identity', 'value', 'expected', 'check', 'meaning'), rows),
            _verdict(doc)]


def _pigeonhole(doc: Mapping[str, Any]) -> List[str]:
    value_key = 'p' if doc['mode'] == 'exact' else 'count'
    header = f"scheme={doc['scheme']} pair={doc['pair']} mode={doc['mode']}"
    if doc['mode'] != 'exact':
        header += f" shots={doc['shots']} seed={doc['seed']}"
    rows = [(e['parity'], e['ya'], e['yb'], e['yc'], e[value_key]) for e in doc['joint']]
    conditional = doc['conditional'] or {}
    return [
        header,
        render_table(('parity', 'ya', 'yb', 'yc', value_key), rows),
        f"P(same | all +) = {_cell(conditional.get('same'))}",
        f"P(diff | all +) = {_cell(conditional.get('diff'))}",
        f"success_probability = {_cell(doc['success_probability'])}",
        f"discarded = {_cell(doc['discarded'])}",
    ]


def _counterfactual(doc: Mapping[str, Any]) -> List[str]:
    rows = []
    for row in doc['pairs']:
        conditional = row['conditional'] or {}
        rows.append((row['pair'], conditional.get('same'), conditional.get('diff'),
                     row['success_probability'], row['pass']))
    return [f"scheme={doc['scheme']}",
            render_table(('pair', 'P(same|+++)', 'P(diff|+++)', 'P(+++)', 'check'), rows),
            _verdict(doc)]


def _parity_check(doc: Mapping[str, Any]) -> List[str]:
    rows = [(s['scheme'], s['max_probability_deviation'], s['max_state_deviation'], s['pass'])
            for s in doc['schemes']]
    return [f"reference={doc['reference']} states={doc['states']} seed={doc['seed']}",
            render_table(('scheme', 'max |dp|', 'max 1-|overlap|', 'check'), rows),
            _verdict(doc)]


def _lhv_scan(doc: Mapping[str, Any]) -> List[str]:
    comparison = [(name, entry['statistic'], entry['quantum'])
                  for name, entry in doc['comparison'].items()]
    witnesses = [(w['model'], w['statistic'], w['model_value'], w['quantum_value'])
                 for w in doc['witnesses']]
    conspiracy = doc['conspiracy']
    witness = conspiracy['witness'] or {}
    return [
        f"lambda_bits={doc['lambda_bits']} pair={doc['pair']} tolerance={doc['tolerance']}",
        render_table(('statistic', 'meaning', 'quantum'), comparison),
        f"models_tested = {doc['models_tested']}",
        f"models_consistent = {doc['models_consistent']}",
        render_table(('model', 'first deviation', 'model value', 'quantum value'), witnesses),
        f"conspiracy: P(++ | same) = {_cell(conspiracy['p_plus_plus_given_same'])}, "
        f"witness {witness.get('statistic')} = {_cell(witness.get('model_value'))} "
        f"vs {_cell(witness.get('quantum_value'))}",
        _verdict(doc),
    ]


def _locc_trace(doc: Mapping[str, Any]) -> List[str]:
    locality = doc['locality']
    lines = list(doc['trace'])
    lines.append(f"cross_site_quantum_ops = {locality['cross_site_quantum_ops']}")
    lines.append(f"classical_bits_exchanged = {locality['classical_bits_exchanged']}")
    causal = doc.get('causal_order')
    if causal is not None:
        outcome = causal.get('not_applicable') or _cell(causal['pass'])
        lines.append(f"causal_order({causal['before']} before {causal['after']}) = {outcome}")
    lines.append(_verdict(doc))
    return lines


_RENDERERS: Dict[str, Callable[[Mapping[str, Any]], List[str]]] = {
    'amplitudes': _amplitudes,
    'pigeonhole': _pigeonhole,
    'counterfactual': _counterfactual,
    'parity-check': _parity_check,
    'lhv-scan': _lhv_scan,
    'locc-trace': _locc_trace,
}


def render_report(command: str, document: Mapping[str, Any]) -> str:
    """Human-readable form of a command's report document."""
    if command == 'parse':
        return document['circuit'].rstrip('\n')
    return '\n'.join(_RENDERERS[command](document))
