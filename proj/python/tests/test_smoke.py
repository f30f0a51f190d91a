import json

import pytest

import skillmem


def test_population_is_deterministic_and_bounded():
    s = skillmem.AbstractScenario()
    a = skillmem.run_population(s, agents=200, rollouts=50, seed=3)
    b = skillmem.run_population(s, agents=200, rollouts=50, seed=3, jobs=2)
    assert a.curve == b.curve
    assert len(a.curve) == 50
    assert all(0.0 <= v <= 1.0 for v in a.curve)
    assert a.n_r == skillmem.first_crossing(skillmem.smooth(a.curve), 0.9)


def test_sweep_reports_duplicates():
    rows, warnings = skillmem.sweep_preps(skillmem.AbstractScenario(), [6, 6, 8], agents=20, rollouts=20)
    assert [n for n, _ in rows] == [6, 8]
    assert len(warnings) == 1


def test_invalid_input_raises():
    s = skillmem.AbstractScenario()
    s.num_preps = 2
    with pytest.raises(skillmem.SkillmemError):
        skillmem.run_population(s, agents=10, rollouts=10)
    with pytest.raises(ValueError):
        skillmem.Session(scenario="no-such-scenario")


def test_dataset_round_trip_and_discrimination_order():
    csv = skillmem.generate_dataset("book", seed=4, samples=20, supervised=True)
    assert csv.startswith("series_id,sensing_action,label,t,fx,fy,fz,tx,ty,tz,px,py,pz\n")
    acc = skillmem.cross_validate_csv(csv, folds=5)
    assert set(acc) == {"slide", "poke", "press"}
    assert acc["slide"] > acc["poke"]
    assert skillmem.discrimination_score(0.9, 10.0) > skillmem.discrimination_score(0.3, 10.0)


def test_session_play_execute_and_register():
    s = skillmem.Session("book", seed=7)
    s.add_skill("tabletop-grasp")
    res = s.play("tabletop-grasp", max_rollouts=1000)
    assert res["reached_confidence"]
    assert res["csv"].startswith("rollout,sensing,state,prep,success,reward,confidence\n")
    assert s.status("tabletop-grasp") == "confident"

    out = s.execute("tabletop-grasp", world="orientation=binding")
    assert out["prep"] in {"rot90", "rot180", "rot270", "flip", "nothing"}

    s.add_skill("drop-into-box")
    assert s.register("tabletop-grasp", ["drop-into-box"]) == []
    assert s.status("tabletop-grasp") == "registered-as-prep"
    doc = s.ecm_json("drop-into-box")
    skillmem.validate_ecm(doc)
    assert 0.0 < skillmem.ecm_prep_probability(doc, "tabletop-grasp") < 1.0
    reg = json.loads(s.registry_json())
    assert [k["id"] for k in reg["skills"]] == ["tabletop-grasp", "drop-into-box"]


def test_scenario_document():
    doc = json.loads(skillmem.scenario_json("box"))
    assert doc["name"] == "box"
