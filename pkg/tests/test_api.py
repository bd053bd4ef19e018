import io
import math
import os
import uuid

import openpyxl
import pandas as pd
import pytest

from processors import ci_processor, oracle_processor
from processors import coverage_report_processor as report
from stablefield.errors import DomainError, NumericError
from stablefield.harness import TABLE_COLUMNS

HAND_CSV = 'x,y,mark\n1,1,1\n4,4,-2\n6,2,2\n7,3,3\n8,8,4\n'

COVERAGE_CSV = (
    'alpha,c,method,level,coverage,se,reps,mean_width,mean_count\n'
    '1.5,0.2,known_alpha,0.9,0.86,0.0155,500,1.1,100.2\n'
    '1.5,0.2,self_normalized,0.9,0.95,0.0097,500,1.4,100.2\n'
    '1.5,0.2,known_alpha,0.95,0.92,0.0121,500,1.3,100.2\n'
    '1.5,0.2,self_normalized,0.95,0.97,0.0076,500,1.7,100.2\n'
)


def upload(text, name):
    return (io.BytesIO(text.encode()), name)


def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    body = response.get_json()
    assert body['status'] == 'healthy'
    assert 'confidence_intervals' in body['services']
    assert response.headers['Access-Control-Allow-Origin'] == '*'


def test_root_lists_endpoints(client):
    body = client.get('/').get_json()
    assert body['endpoints']['oracles'] == '/api/oracle/'


def test_ci_service_info(client):
    body = client.get('/api/ci/').get_json()
    assert body['methods'] == ['known_alpha', 'self_normalized']


def test_ci_requires_csv_upload(client):
    assert client.post('/api/ci/', data={}).status_code == 400
    response = client.post('/api/ci/', data={'file': upload(HAND_CSV, 'sample.txt')},
                           content_type='multipart/form-data')
    assert response.status_code == 400
    assert response.get_json()['success'] is False


def test_ci_hand_sample(client):
    data = {'file': upload(HAND_CSV, 'sample.csv'), 'alpha': '2.0', 'c': '0.5', 'method': 'known_alpha',
            'level': '0.5', 'mc_draws': '4', 'anchor_mode': 'grid', 'region': '10,10,1'}
    response = client.post('/api/ci/', data=data, content_type='multipart/form-data')
    assert response.status_code == 200
    body = response.get_json()
    assert body['points'] == 5
    record = body['records'][0]
    assert record['ci_lower'] == pytest.approx(1.6 - 0.9 * math.sqrt(2.0) / math.sqrt(5.0))
    assert record['ci_upper'] == pytest.approx(1.6 + 2.1 * math.sqrt(2.0) / math.sqrt(5.0))


def test_ci_rejects_bad_options(client):
    data = {'file': upload(HAND_CSV, 'sample.csv'), 'c': '1.5', 'mc_draws': '10'}
    assert client.post('/api/ci/', data=data, content_type='multipart/form-data').status_code == 400
    data = {'file': upload(HAND_CSV, 'sample.csv'), 'mc_draws': '0'}
    assert client.post('/api/ci/', data=data, content_type='multipart/form-data').status_code == 400
    data = {'file': upload('x,y\n1,1\n', 'sample.csv')}
    assert client.post('/api/ci/', data=data, content_type='multipart/form-data').status_code == 400


def test_ci_rejects_blank_or_infinite_marks(client):
    for text in ('x,y,mark\n1,1,1\n2,2,\n', 'x,y,mark\n1,1,1\n2,2,inf\n', 'x,y,mark\n1,1,1\nnan,2,3\n'):
        data = {'file': upload(text, 'sample.csv'), 'mc_draws': '10'}
        response = client.post('/api/ci/', data=data, content_type='multipart/form-data')
        assert response.status_code == 400
        assert response.get_json()['success'] is False


def test_ci_unexpected_failure_is_500(client, monkeypatch):
    def crash(*args, **kwargs):
        raise RuntimeError('worker vanished')

    monkeypatch.setattr(ci_processor, 'analyze_sample', crash)
    data = {'file': upload(HAND_CSV, 'sample.csv'), 'mc_draws': '10'}
    response = client.post('/api/ci/', data=data, content_type='multipart/form-data')
    assert response.status_code == 500
    assert response.get_json()['error'].startswith('Processing failed')


def test_oracle_service_info(client):
    body = client.get('/api/oracle/').get_json()
    assert 'gauss2d' in body['filters']
    assert 'scale_mean' in body['quantities']


def test_oracle_closed_forms(client):
    response = client.post('/api/oracle/', json={'quantities': 'c_alpha,sigma_psi', 'alpha': 1.0,
                                                 'filter': 'gauss2d'})
    assert response.status_code == 200
    records = response.get_json()['records']
    assert records[0]['estimate'] == pytest.approx(2.0 / math.pi)
    assert records[1]['estimate'] == pytest.approx(2.0 * math.pi, rel=1e-8)


def test_oracle_rejects_bad_requests(client):
    assert client.post('/api/oracle/', data='not json', content_type='text/plain').status_code == 400
    assert client.post('/api/oracle/', json={'quantities': ['bogus']}).status_code == 400
    assert client.post('/api/oracle/', json={'draws': 10 ** 7}).status_code == 400
    assert client.post('/api/oracle/', json={'filter': 'hexagon'}).status_code == 400
    assert client.post('/api/oracle/', json={'alpha': 'abc'}).status_code == 400


def test_coverage_report_round_trip(client):
    response = client.post('/api/coverage-report/',
                           data={'file': upload(COVERAGE_CSV, 'coverage.csv'), 'region': 'square'},
                           content_type='multipart/form-data')
    assert response.status_code == 200
    body = response.get_json()
    assert body['summary']['cells'] == 4
    assert body['summary']['levels'] == [0.9, 0.95]
    assert body['summary']['matched_reference_cells'] == 4

    download = client.get(f"/api/coverage-report/download/{body['file_id']}")
    assert download.status_code == 200
    assert download.mimetype == report.XLSX_MIMETYPE
    workbook = openpyxl.load_workbook(io.BytesIO(download.data))
    assert workbook.sheetnames == ['Coverage', 'Level 0.90', 'Level 0.95']


def test_coverage_report_rejects_missing_columns(client):
    response = client.post('/api/coverage-report/', data={'file': upload('alpha,c\n1.5,0.2\n', 'coverage.csv')},
                           content_type='multipart/form-data')
    assert response.status_code == 400


def test_coverage_report_download_errors(client):
    assert client.get('/api/coverage-report/download/not-a-uuid').status_code == 400
    assert client.get(f'/api/coverage-report/download/{uuid.uuid4()}').status_code == 404


def test_workbook_layout(tmp_path):
    frame = pd.read_csv(io.StringIO(COVERAGE_CSV))
    path = tmp_path / 'coverage.xlsx'
    report.write_coverage_workbook(frame, str(path))
    workbook = openpyxl.load_workbook(path)
    table = workbook['Coverage']
    assert [cell.value for cell in table[1]] == [c.replace('_', ' ') for c in TABLE_COLUMNS]
    assert table.freeze_panes == 'A2'
    grid = workbook['Level 0.90']
    assert grid['B2'].value == 'known_alpha c=0.2'
    assert grid['A3'].value == 1.5
    assert grid['B3'].value == pytest.approx(0.86)


def test_workbook_rejects_empty_frame(tmp_path):
    with pytest.raises(DomainError):
        report.write_coverage_workbook(pd.DataFrame(columns=TABLE_COLUMNS), str(tmp_path / 'empty.xlsx'))


def test_cleanup_old_files():
    path = os.path.join(report.PROCESSED_FILES_DIR, f'{uuid.uuid4()}{report.REPORT_SUFFIX}')
    with open(path, 'wb') as handle:
        handle.write(b'stale')
    os.utime(path, (0, 0))
    assert report.cleanup_old_files(ttl_seconds=60) >= 1
    assert not os.path.exists(path)


def test_oracle_failures_are_500(client, monkeypatch):
    def diverge(*args, **kwargs):
        raise NumericError('integral did not converge')

    monkeypatch.setattr(oracle_processor, 'evaluate_oracles', diverge)
    response = client.post('/api/oracle/', json={'quantities': 'sigma_psi'})
    assert response.status_code == 500
    assert response.get_json()['error'].startswith('Evaluation failed')

    def crash(*args, **kwargs):
        raise KeyError('chunk')

    monkeypatch.setattr(oracle_processor, 'evaluate_oracles', crash)
    response = client.post('/api/oracle/', json={'quantities': 'sigma_psi'})
    assert response.status_code == 500
    assert response.get_json()['error'].startswith('Processing failed')


def test_coverage_report_unexpected_failure_is_500(client, monkeypatch):
    def crash(*args, **kwargs):
        raise MemoryError('workbook too large')

    monkeypatch.setattr(report, 'write_coverage_workbook', crash)
    response = client.post('/api/coverage-report/', data={'file': upload(COVERAGE_CSV, 'coverage.csv')},
                           content_type='multipart/form-data')
    assert response.status_code == 500
    assert response.get_json()['success'] is False
