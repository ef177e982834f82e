"""Prints one verdict line per acceptance check after the run."""

ACCEPTANCE = {
    "test_classifier_constant_on_reachability_classes": 1,
    "test_general_normal_form_on_random_systems": 2,
    "test_stabilized_normal_form_on_random_systems": 3,
    "test_parity_normal_form_matches_classifier": 4,
    "test_bundled_chart_pipeline": 5,
    "test_blackless_charts_unbraid_within_bound": 6,
    "test_random_chart_moves_sound_and_reversible": 7,
    "test_word_problem_agrees_with_rewriting_oracle": 8,
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, ()):
            name = rep.nodeid.split("::")[-1].split("[")[0]
            num = ACCEPTANCE.get(name)
            if num is None:
                continue
            verdict = "PASS" if outcome == "passed" else "FAIL"
            # a setup error and a call report can both land here; keep the worst
            if results.get(num, ("PASS",))[0] == "FAIL":
                continue
            results[num] = (verdict, getattr(rep, "duration", 0.0))
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        verdict, duration = results[num]
        terminalreporter.write_line(f"criterion {num}: {verdict} ({duration:.1f}s)")
