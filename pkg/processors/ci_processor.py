from flask import Blueprint, request, jsonify
import logging
import os
import tempfile
from werkzeug.utils import secure_filename

import config as settings
from stablefield.errors import DomainError, ConfigError
from stablefield.harness import analyze_sample
from stablefield.statistics import read_marked_sample_csv
from stablefield.subsampling import AnchorMode, Method

ci_processor_bp = Blueprint('ci_processor', __name__)

# Configuration
ALLOWED_EXTENSIONS = {'csv'}
DEFAULT_LEVELS = '0.90,0.95,0.99'
MAX_MC_DRAWS = 50000


def allowed_file(filename):
    return '.' in filename and filename.rsplit('.', 1)[1].lower() in ALLOWED_EXTENSIONS


def parse_request_options(form):
    """Read interval options from multipart form fields"""
    region = settings.parse_region(form.get('region', '10,10,1'))
    methods = settings.parse_methods(form.get('method', 'known_alpha,self_normalized'))
    try:
        methods = tuple(Method(m) for m in methods)
        anchor_mode = AnchorMode(form.get('anchor_mode', AnchorMode.MONTE_CARLO.value))
        mc_draws = int(form.get('mc_draws', 2000))
        seed = int(form.get('seed', settings.DEFAULT_SEED))
        intensity = float(form.get('intensity', 1.0))
    except ValueError as e:
        raise ConfigError(str(e)) from e

    if not 1 <= mc_draws <= MAX_MC_DRAWS:
        raise ConfigError(f'mc_draws must lie between 1 and {MAX_MC_DRAWS}')

    return {
        'region': region,
        'alphas': settings.parse_float_list(form.get('alpha', '1.5')),
        'c_values': settings.parse_float_list(form.get('c', '0.2')),
        'methods': methods,
        'levels': settings.parse_float_list(form.get('level', DEFAULT_LEVELS)),
        'mc_draws': mc_draws,
        'seed': seed,
        'anchor_mode': anchor_mode,
        'intensity': intensity,
    }


@ci_processor_bp.route('/', methods=['GET'])
def get_service_info():
    """Get confidence interval service information"""
    return jsonify({
        'service': 'Subsampling Confidence Interval API',
        'description': 'Upload a marked point sample to get subsampling confidence intervals for its mean',
        'usage': 'POST a CSV file (columns x, y, mark) with form fields alpha, c, method, level, mc_draws, seed, region',
        'supported_formats': sorted(ALLOWED_EXTENSIONS),
        'methods': [m.value for m in Method]
    })


@ci_processor_bp.route('/', methods=['POST'])
def compute_intervals():
    """Compute subsampling intervals for an uploaded marked sample"""
    logging.info("[CI] Interval request received")

    if 'file' not in request.files:
        return jsonify({
            'success': False,
            'error': 'No file uploaded'
        }), 400

    file = request.files['file']
    if file.filename == '':
        return jsonify({
            'success': False,
            'error': 'No file selected'
        }), 400

    if not allowed_file(file.filename):
        return jsonify({
            'success': False,
            'error': 'Invalid file type. Please upload a CSV file'
        }), 400

    filename = secure_filename(file.filename)
    with tempfile.NamedTemporaryFile(delete=False, suffix='.csv') as tmp_file:
        file.save(tmp_file.name)
        temp_input_path = tmp_file.name

    try:
        options = parse_request_options(request.form)
        sample = read_marked_sample_csv(temp_input_path, options['region'], options['intensity'])
        logging.info(f"[CI] {filename}: {sample.count} marked points")

        records = analyze_sample(sample, options['alphas'], options['c_values'], options['methods'],
                                 options['levels'], options['mc_draws'], options['seed'],
                                 anchor_mode=options['anchor_mode'])
        return jsonify({
            'success': True,
            'file': filename,
            'points': sample.count,
            'records': records
        })

    except (DomainError, ConfigError) as e:
        logging.error(f"[ERROR] Interval request rejected: {str(e)}")
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400

    except Exception as e:
        logging.error(f"[ERROR] Interval computation failed: {str(e)}")
        return jsonify({
            'success': False,
            'error': f'Processing failed: {str(e)}'
        }), 500

    finally:
        if os.path.exists(temp_input_path):
            os.unlink(temp_input_path)
