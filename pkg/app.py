"""
Flask application exposing the pigeonhole simulator as a JSON API.

Every endpoint returns the same report document as the matching CLI
command, plus a ``pass`` flag. Query parameters mirror the CLI flags.
"""
import os
from datetime import datetime, timezone
from types import SimpleNamespace

from flask import Flask, jsonify, request
from flask_compress import Compress
from flask_limiter import Limiter
from flask_limiter.util import get_remote_address

from config import get_config
from error_handlers import register_error_handlers
from exceptions import InvalidArgumentError
from services.experiment_service import ExperimentService, Report
from utils import log_request_metrics, safe_int, setup_logging

VERSION = '1.0.0'


def _build_services(flask_app):
    """Instantiate the service singletons from ``flask_app.config``."""
    return SimpleNamespace(
        experiments=ExperimentService(
            default_seed=flask_app.config['DEFAULT_SEED'],
            default_shots=flask_app.config['DEFAULT_SHOTS'],
            equivalence_states=flask_app.config['EQUIVALENCE_STATES'],
            equivalence_seed=flask_app.config['EQUIVALENCE_SEED'],
            oracle_host=flask_app.config['ORACLE_HOST'],
            max_qubits=flask_app.config['MAX_QUBITS'],
        ),
    )


def _respond(report: Report):
    return jsonify({**report.document, 'pass': report.passed})


def _flag(name: str) -> bool:
    return request.args.get(name, '').strip().lower() in ('1', 'true', 'yes', 'on')


def create_app(config_name=None):
    """Application factory.

    Builds a Flask app, wires Compress and Flask-Limiter, configures
    logging and error handlers, and registers the API routes. Returns the
    app together with its limiter so tests can reset rate limits.
    """
    flask_app = Flask(__name__)

    config_class = get_config(config_name)
    flask_app.config.from_object(config_class)
    config_class.validate()
    flask_app.json.sort_keys = flask_app.config['JSON_SORT_KEYS']

    Compress(flask_app)

    rate_limiter = Limiter(
        key_func=get_remote_address,
        default_limits=[flask_app.config['DEFAULT_RATE_LIMIT']],
        storage_uri=flask_app.config['RATELIMIT_STORAGE_URL'],
    )
    rate_limiter.init_app(flask_app)

    setup_logging(flask_app)
    register_error_handlers(flask_app)

    flask_app.services = _build_services(flask_app)
    _register_routes(flask_app, rate_limiter)
    return flask_app, rate_limiter


def _register_routes(flask_app, rate_limiter):
    experiments: ExperimentService = flask_app.services.experiments

    @flask_app.route('/health')
    @log_request_metrics
    def health_check():
        """Basic health check endpoint."""
        return jsonify({
            'status': 'healthy',
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'version': VERSION,
            'oracle_host': experiments.oracle_host,
        })

    @flask_app.route('/api/amplitudes')
    @log_request_metrics
    def api_amplitudes():
        return _respond(experiments.amplitude_identities())

    @flask_app.route('/api/pigeonhole')
    @log_request_metrics
    def api_pigeonhole():
        args = request.args
        mode = experiments.resolve_mode(_flag('exact'), args.get('shots'), args.get('seed'))
        return _respond(experiments.pigeonhole(args.get('scheme'), args.get('pair'), mode,
                                               args.get('oracle_host')))

    @flask_app.route('/api/counterfactual')
    @log_request_metrics
    def api_counterfactual():
        return _respond(experiments.counterfactual(request.args.get('scheme'),
                                                   request.args.get('oracle_host')))

    @flask_app.route('/api/parity-check')
    @rate_limiter.limit(flask_app.config['EQUIVALENCE_RATE_LIMIT'])
    @log_request_metrics
    def api_parity_check():
        args = request.args
        return _respond(experiments.parity_check(args.get('states'), args.get('seed'),
                                                 args.get('oracle_host')))

    @flask_app.route('/api/lhv-scan')
    @rate_limiter.limit(flask_app.config['SCAN_RATE_LIMIT'])
    @log_request_metrics
    def api_lhv_scan():
        args = request.args
        witness_limit = safe_int(args.get('witnesses'), 10)
        if witness_limit < 0:
            raise InvalidArgumentError("witnesses must be non-negative",
                                       field="witnesses", value=args.get('witnesses'))
        return _respond(experiments.lhv_scan(args.get('lambda_bits', 0), args.get('pair'),
                                             _flag('with_control'), witness_limit))

    @flask_app.route('/api/locc-trace')
    @log_request_metrics
    def api_locc_trace():
        args = request.args
        return _respond(experiments.locc_trace(args.get('scheme'), args.get('pair'),
                                               args.get('oracle_host')))

    @flask_app.route('/api/parse', methods=['POST'])
    @log_request_metrics
    def api_parse():
        """Normalize a circuit sent as the raw body or as ``{"circuit": text}``."""
        if request.is_json:
            payload = request.get_json(silent=True) or {}
            text = payload.get('circuit')
        else:
            text = request.get_data(as_text=True)
        if not isinstance(text, str) or not text.strip():
            raise InvalidArgumentError("request body must contain circuit text",
                                       field="circuit")
        return _respond(experiments.normalize_circuit(text))


# Default app instance for WSGI servers, built from PIGEONHOLE_CONFIG.
app, limiter = create_app()

if __name__ == '__main__':
    # Loopback by default; set HOST=0.0.0.0 to expose the dev server.
    app.run(
        debug=app.config.get('DEBUG', False),
        host=os.environ.get('HOST', '127.0.0.1'),
        port=int(os.environ.get('PORT', 8000)),
    )
