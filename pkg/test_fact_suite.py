"""Tests for the fixed fact suite."""

from fact_suite import FACTS, FIXTURES, FactSuite, all_passed, run_fact_suite


def test_every_fact_passes():
    report = run_fact_suite()
    assert len(report) == len(FACTS) == 15
    assert all_passed(report), report[report['status'] != 'PASS'].to_dict('records')


def test_corrupted_fixture_is_detected():
    report = run_fact_suite(fixtures={'U': FIXTURES['X']})
    assert not all_passed(report)
    failed = set(report.loc[report['status'] == 'FAIL', 'fact'])
    assert {'min-preserves-U', 'U-min-clause-form'} <= failed
    assert 'mx-preserves-X' not in failed


def test_filter_without_matches_passes_vacuously():
    report = run_fact_suite('no-such-fact')
    assert report.empty
    assert all_passed(report)


def test_mx_filter():
    report = run_fact_suite('mx')
    assert list(report['fact']) == ['mx-violates-leq', 'mx-violates-U', 'mx-preserves-X', 'mx-preserves-lt',
                                    'mx-violates-pp-not-min']
    assert all_passed(report)


def test_counterexample_detail():
    report = run_fact_suite('min-violates-neq')
    assert report.iloc[0]['detail'] == '(0,1) and (1,0) -> (0,0)'


def test_suite_stats():
    suite = FactSuite()
    suite.run('U')
    assert suite.stats['run'] == 3
    assert suite.stats['passed'] == 3
    assert suite.stats['failed'] == []
    assert suite.variables('U') == ('x', 'y', 'z')
