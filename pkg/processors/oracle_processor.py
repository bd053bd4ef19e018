from flask import Blueprint, request, jsonify
import logging

import config as settings
from stablefield.errors import StableFieldError, DomainError, ConfigError
from stablefield.limit_theory import ORACLE_QUANTITIES, evaluate_oracles
from stablefield.random_field import FILTER_REGISTRY, build_filter

oracle_bp = Blueprint('oracle', __name__)

# Requests run inline, so keep Monte Carlo work bounded
MAX_DRAWS = 200000
DEFAULT_DRAWS = 20000


@oracle_bp.route('/', methods=['GET'])
def get_service_info():
    """Get oracle service information"""
    return jsonify({
        'service': 'Limit Theory Oracle API',
        'description': 'Closed-form and Monte Carlo limit quantities for a stable moving-average field',
        'usage': 'POST JSON with quantities, alpha, filter, r, draws, seed',
        'quantities': list(ORACLE_QUANTITIES),
        'filters': sorted(FILTER_REGISTRY),
        'max_draws': MAX_DRAWS
    })


@oracle_bp.route('/', methods=['POST'])
def evaluate():
    """Evaluate the requested oracle quantities"""
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        return jsonify({
            'success': False,
            'error': 'Request body must be a JSON object'
        }), 400

    quantities = payload.get('quantities', ['scale_mean'])
    if isinstance(quantities, str):
        quantities = [q.strip() for q in quantities.split(',') if q.strip()]

    try:
        alpha = float(payload.get('alpha', 1.5))
        r = float(payload.get('r', 1.0))
        draws = int(payload.get('draws', DEFAULT_DRAWS))
        seed = int(payload.get('seed', settings.DEFAULT_SEED))
        if not 1 <= draws <= MAX_DRAWS:
            raise ConfigError(f'draws must lie between 1 and {MAX_DRAWS}')

        filter_spec = payload.get('filter', {'name': 'gauss2d'})
        if isinstance(filter_spec, str):
            filter_spec = {'name': filter_spec}
        psi = build_filter(filter_spec)

        logging.info(f"[ORACLE] Request for {quantities} with alpha={alpha}, filter={psi.name}")
        records = evaluate_oracles(quantities, psi, alpha, r=r, draws=draws, seed=seed)
        return jsonify({
            'success': True,
            'alpha': alpha,
            'filter': psi.name,
            'records': records
        })

    except (ValueError, TypeError, DomainError, ConfigError) as e:
        logging.error(f"[ERROR] Oracle request rejected: {str(e)}")
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400

    except StableFieldError as e:
        logging.error(f"[ERROR] Oracle evaluation failed: {str(e)}")
        return jsonify({
            'success': False,
            'error': f'Evaluation failed: {str(e)}'
        }), 500

    except Exception as e:
        logging.error(f"[ERROR] Oracle request failed: {str(e)}")
        return jsonify({
            'success': False,
            'error': f'Processing failed: {str(e)}'
        }), 500
