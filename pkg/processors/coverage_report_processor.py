from flask import Blueprint, request, jsonify, send_file
import openpyxl
import pandas as pd
import logging
import os
import tempfile
import uuid
from datetime import datetime
from openpyxl.styles import Font, Alignment, PatternFill
from openpyxl.utils import get_column_letter
from werkzeug.utils import secure_filename

import config as settings
from stablefield.errors import DomainError, ReportIOError
from stablefield.harness import TABLE_COLUMNS, compare_to_reference, load_reference, read_table

coverage_report_bp = Blueprint('coverage_report', __name__)

# Configuration
ALLOWED_EXTENSIONS = {'csv'}
REPORT_SUFFIX = '_coverage.xlsx'
XLSX_MIMETYPE = 'application/vnd.openxmlformats-officedocument.spreadsheetml.sheet'

# Create a persistent directory for generated reports
PROCESSED_FILES_DIR = os.path.join(tempfile.gettempdir(), 'stablefield_reports')
os.makedirs(PROCESSED_FILES_DIR, exist_ok=True)

HEADER_FONT = Font(name="Calibri", size=11, bold=True)
HEADER_FILL = PatternFill(start_color="D9D9D9", end_color="D9D9D9", fill_type="solid")
HEADER_ALIGNMENT = Alignment(horizontal='center', vertical='center')
DATA_FONT = Font(name="Calibri", size=11)
TITLE_FONT = Font(name="Calibri", size=14, bold=True, color="FFFFFF")
TITLE_FILL = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")
# Cells more than two standard errors from the nominal level
MISS_FILL = PatternFill(start_color="F8CBAD", end_color="F8CBAD", fill_type="solid")


def cleanup_old_files(ttl_seconds=None):
    """Remove generated reports older than the configured TTL"""
    ttl_seconds = settings.REPORT_TTL_SECONDS if ttl_seconds is None else ttl_seconds
    removed = 0
    try:
        current_time = datetime.now()
        for filename in os.listdir(PROCESSED_FILES_DIR):
            if filename.endswith(REPORT_SUFFIX):
                file_path = os.path.join(PROCESSED_FILES_DIR, filename)
                file_mtime = datetime.fromtimestamp(os.path.getmtime(file_path))
                if (current_time - file_mtime).total_seconds() > ttl_seconds:
                    os.remove(file_path)
                    removed += 1
                    logging.info(f"Cleaned up old report: {filename}")
    except OSError as e:
        logging.error(f"Cleanup error: {e}")
    return removed


def allowed_file(filename):
    return '.' in filename and filename.rsplit('.', 1)[1].lower() in ALLOWED_EXTENSIONS


def _write_header(worksheet, row, headers, column_widths):
    for col_idx, header in enumerate(headers, 1):
        cell = worksheet.cell(row, col_idx, header)
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
        cell.alignment = HEADER_ALIGNMENT
        column_widths[col_idx] = max(column_widths.get(col_idx, 8), len(str(header)) + 2)


def _write_table_sheet(workbook, frame):
    worksheet = workbook.active
    worksheet.title = "Coverage"
    columns = list(frame.columns)
    column_widths = {}
    _write_header(worksheet, 1, [c.replace('_', ' ') for c in columns], column_widths)

    for row_idx, row in enumerate(frame.itertuples(index=False), 2):
        for col_idx, value in enumerate(row, 1):
            if isinstance(value, float) and pd.isna(value):
                value = None
            cell = worksheet.cell(row_idx, col_idx, value)
            cell.font = DATA_FONT
            if columns[col_idx - 1] in ('coverage', 'se', 'mean_width', 'reference', 'delta'):
                cell.number_format = '0.000'
        if {'coverage', 'se', 'level'} <= set(columns):
            record = dict(zip(columns, row))
            if abs(record['coverage'] - record['level']) > 2 * record['se'] + 1e-12:
                worksheet.cell(row_idx, columns.index('coverage') + 1).fill = MISS_FILL

    for col_idx, width in column_widths.items():
        worksheet.column_dimensions[get_column_letter(col_idx)].width = max(width, 10)
    worksheet.freeze_panes = 'A2'


def _write_level_sheet(workbook, frame, level, reference):
    """Alpha rows against method/c columns for one nominal level."""
    worksheet = workbook.create_sheet(f"Level {level:.2f}")
    subset = frame[frame['level'].round(6) == round(level, 6)]
    grid = subset.pivot_table(index='alpha', columns=['method', 'c'], values='coverage', aggfunc='first')

    title = worksheet.cell(1, 1, f"Empirical coverage at nominal level {level:.2f}")
    title.font = TITLE_FONT
    title.fill = TITLE_FILL
    worksheet.merge_cells(start_row=1, start_column=1, end_row=1, end_column=max(2, len(grid.columns) + 1))

    column_widths = {}
    headers = ['alpha'] + [f"{method} c={c:g}" for method, c in grid.columns]
    _write_header(worksheet, 2, headers, column_widths)

    ref_grid = None
    if reference is not None and 'reference' in reference.columns:
        ref_subset = reference[reference['level'].round(6) == round(level, 6)]
        ref_grid = ref_subset.pivot_table(index='alpha', columns=['method', 'c'], values='reference',
                                          aggfunc='first')

    for row_idx, (alpha, values) in enumerate(grid.iterrows(), 3):
        worksheet.cell(row_idx, 1, float(alpha)).font = HEADER_FONT
        for col_idx, key in enumerate(grid.columns, 2):
            value = values[key]
            cell = worksheet.cell(row_idx, col_idx, None if pd.isna(value) else float(value))
            cell.font = DATA_FONT
            cell.number_format = '0.000'

    if ref_grid is not None and not ref_grid.empty:
        start = len(grid) + 5
        label = worksheet.cell(start - 1, 1, "Published coverage (delta = empirical - published)")
        label.font = Font(name="Calibri", size=10, italic=True)
        _write_header(worksheet, start, headers, column_widths)
        for row_idx, alpha in enumerate(grid.index, start + 1):
            worksheet.cell(row_idx, 1, float(alpha)).font = HEADER_FONT
            for col_idx, key in enumerate(grid.columns, 2):
                ref_value = ref_grid[key].get(alpha) if key in ref_grid.columns else None
                if ref_value is None or pd.isna(ref_value):
                    continue
                delta = grid[key][alpha] - ref_value
                cell = worksheet.cell(row_idx, col_idx, f"{ref_value:.3f} ({delta:+.3f})")
                cell.font = DATA_FONT

    for col_idx, width in column_widths.items():
        worksheet.column_dimensions[get_column_letter(col_idx)].width = max(width, 10)
    worksheet.freeze_panes = 'B3'


def write_coverage_workbook(frame, path, reference=None):
    """Write a coverage table as a styled workbook: the flat table plus one grid per level.

    ``reference`` is the output of ``compare_to_reference`` when published values exist.
    """
    if frame.empty:
        raise DomainError("Cannot build a workbook from an empty coverage table")
    source = reference if reference is not None else frame
    workbook = openpyxl.Workbook()
    _write_table_sheet(workbook, source)
    for level in sorted(frame['level'].unique()):
        _write_level_sheet(workbook, frame, float(level), reference)
    try:
        workbook.save(path)
    except OSError as exc:
        raise ReportIOError(f"Cannot write workbook to {path}: {exc}") from exc
    return path


@coverage_report_bp.route('/', methods=['GET'])
def get_service_info():
    """Get coverage report service information"""
    regions = sorted(load_reference()['region'].unique())
    return jsonify({
        'service': 'Coverage Report API',
        'description': 'Turn a coverage table CSV into a styled Excel report, optionally against published coverage',
        'usage': 'POST a coverage CSV as file, optional form field region',
        'required_columns': TABLE_COLUMNS,
        'reference_regions': regions,
        'supported_formats': sorted(ALLOWED_EXTENSIONS)
    })


@coverage_report_bp.route('/', methods=['POST'])
def create_report():
    """Build a coverage workbook from an uploaded coverage table"""
    logging.info("[REPORT] Coverage report request received")
    cleanup_old_files()

    if 'file' not in request.files:
        return jsonify({'success': False, 'error': 'No file uploaded'}), 400

    file = request.files['file']
    if file.filename == '':
        return jsonify({'success': False, 'error': 'No file selected'}), 400
    if not allowed_file(file.filename):
        return jsonify({'success': False, 'error': 'Invalid file type. Please upload a CSV file'}), 400

    filename = secure_filename(file.filename)
    with tempfile.NamedTemporaryFile(delete=False, suffix='.csv') as tmp_file:
        file.save(tmp_file.name)
        temp_input_path = tmp_file.name

    try:
        table = read_table(temp_input_path)
        region = request.form.get('region', '').strip() or None
        comparison = compare_to_reference(table, region) if region else None

        file_id = str(uuid.uuid4())
        output_path = os.path.join(PROCESSED_FILES_DIR, f'{file_id}{REPORT_SUFFIX}')
        write_coverage_workbook(table.frame, output_path, reference=comparison)
        logging.info(f"[REPORT] {filename}: {len(table)} cells written to report {file_id}")

        summary = {
            'cells': len(table),
            'levels': sorted(float(v) for v in table.frame['level'].unique()),
            'methods': sorted(table.frame['method'].unique())
        }
        if comparison is not None:
            deltas = comparison['delta'].dropna()
            summary['matched_reference_cells'] = int(len(deltas))
            summary['max_abs_delta'] = float(deltas.abs().max()) if len(deltas) else None

        return jsonify({
            'success': True,
            'message': 'Coverage report created successfully',
            'file_id': file_id,
            'summary': summary,
            'download_ready': True
        })

    except DomainError as e:
        logging.error(f"[ERROR] Coverage report rejected: {str(e)}")
        return jsonify({'success': False, 'error': str(e)}), 400

    except Exception as e:
        logging.error(f"[ERROR] Coverage report failed: {str(e)}")
        return jsonify({'success': False, 'error': f'Processing failed: {str(e)}'}), 500

    finally:
        if os.path.exists(temp_input_path):
            os.unlink(temp_input_path)


@coverage_report_bp.route('/download/<file_id>', methods=['GET'])
def download_report(file_id):
    """Download a generated coverage workbook by file ID"""
    try:
        uuid.UUID(file_id)
    except ValueError:
        return jsonify({'error': 'Invalid file ID format'}), 400

    file_path = os.path.join(PROCESSED_FILES_DIR, f'{file_id}{REPORT_SUFFIX}')
    if not os.path.exists(file_path):
        return jsonify({'error': 'File not found or expired. Reports are cleaned up after some time.'}), 404

    filename = f'coverage_report_{datetime.now().strftime("%Y%m%d_%H%M%S")}.xlsx'
    return send_file(
        file_path,
        as_attachment=True,
        download_name=filename,
        mimetype=XLSX_MIMETYPE
    )
