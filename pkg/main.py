#!/usr/bin/env python3
"""
stablefield API - subsampling confidence intervals, limit-theory oracles
and coverage reports over HTTP.
"""

from flask import Flask, jsonify, request
import json
import logging
from datetime import datetime

import config as settings
from processors.ci_processor import ci_processor_bp
from processors.coverage_report_processor import coverage_report_bp
from processors.oracle_processor import oracle_bp
from stablefield import __version__

app = Flask(__name__)

# Register blueprints
app.register_blueprint(ci_processor_bp, url_prefix='/api/ci')
app.register_blueprint(oracle_bp, url_prefix='/api/oracle')
app.register_blueprint(coverage_report_bp, url_prefix='/api/coverage-report')

settings.configure_logging()
logger = logging.getLogger(__name__)

SERVICES = {
    'confidence_intervals': 'Subsampling confidence intervals for the mean of an uploaded marked sample',
    'oracles': 'Limit-theory quantities: C_alpha, sigma_psi, limit scale mean and variance, codifference gap',
    'coverage_reports': 'Styled Excel coverage reports with published-coverage comparison'
}


@app.after_request
def after_request(response):
    response.headers.add('Access-Control-Allow-Origin', '*')
    response.headers.add('Access-Control-Allow-Headers', 'Content-Type,Authorization')
    response.headers.add('Access-Control-Allow-Methods', 'GET,PUT,POST,DELETE,OPTIONS')
    return response


@app.before_request
def log_request():
    logger.info(f"[REQUEST] {request.method} {request.path} from {request.remote_addr}")
    if request.is_json and request.get_json(silent=True):
        logger.debug(f"[REQUEST] Request body: {json.dumps(request.get_json(silent=True))}")
    elif request.method == 'POST' and request.content_type and 'multipart' in request.content_type:
        logger.info(f"[REQUEST] Multipart form data with files: {list(request.files.keys())}")


@app.route('/health', methods=['GET'])
def health():
    logger.info("[HEALTH] Health check requested")
    return jsonify({
        'status': 'healthy',
        'service': 'stablefield API',
        'version': __version__,
        'port': settings.PORT,
        'timestamp': datetime.now().isoformat(),
        'services': list(SERVICES)
    })


@app.route('/', methods=['GET'])
def root():
    return jsonify({
        'service': 'stablefield API',
        'status': 'running',
        'version': __version__,
        'services': SERVICES,
        'endpoints': {
            'health': '/health',
            'confidence_intervals': '/api/ci/',
            'oracles': '/api/oracle/',
            'coverage_reports': '/api/coverage-report/',
            'coverage_report_download': '/api/coverage-report/download/<file_id>'
        }
    })


# For Gunicorn deployment
def create_app():
    return app


if __name__ == '__main__':
    port = settings.PORT
    print("=" * 60)
    print(f"STABLEFIELD API v{__version__}")
    print("=" * 60)
    print(f"API URL: http://localhost:{port}")
    print(f"Health Check: http://localhost:{port}/health")
    print("=" * 60)
    print("Endpoints:")
    print("  / - API info and service overview")
    print("  /health - Health status")
    print("  /api/ci/ - Subsampling confidence intervals")
    print("  /api/oracle/ - Limit-theory oracle quantities")
    print("  /api/coverage-report/ - Coverage workbook reports")
    print("=" * 60)

    app.run(
        host='0.0.0.0',
        port=port,
        debug=False
    )
