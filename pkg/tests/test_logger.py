import json

from logger import LogLevel, SolverLogger


def test_disabled_logger_keeps_nothing(capsys):
    log = SolverLogger(enabled=False)
    log.error("boom", ValueError("x"))
    assert log.history == []
    assert capsys.readouterr().err == ""


def test_min_level_filters_entries(capsys):
    log = SolverLogger(min_level=LogLevel.INFO, use_colors=False)
    log.setup("GridHierarchy", {"levels": [15, 7]})
    log.solve_done(False, 40, 1e-3)
    assert [e.level for e in log.history] == ["WARN"]
    assert "[WARN] [SOLVE] GMRES stopped without convergence after 40 iterations" in capsys.readouterr().err


def test_history_json_drops_empty_data(capsys):
    log = SolverLogger(min_level=LogLevel.DEBUG, show_data=False)
    log.check_result("rank", "pass")
    log.tool_call("run_problem", {"config": {"N": 8}})
    entries = json.loads(log.get_history_json())
    assert "data" not in entries[0]
    assert entries[1]["data"] == {"args": {"config": {"N": 8}}}
    assert entries[1]["category"] == "TOOL"
