"""Smoke test for the carrier_sched extension module."""

import json

import carrier_sched as cs


def main():
    inst = cs.Instance.from_json('{"nodes":3,"edges":[[0,1],[1,2]],"tags":[{"id":1,"host":0},{"id":2,"host":2}]}')
    assert inst.node_count == 3 and inst.tag_count == 2
    assert cs.Instance.from_json(inst.to_json()) == inst

    opt = cs.solve_optimal(inst)
    assert cs.schedule_cost(inst, opt) == (1, 1, 3)
    assert opt.slots == [[(0, 1, 1), (2, 2, 1)]]
    assert cs.Schedule.from_json(inst, opt.to_json(inst)) == opt

    heur = cs.solve_heuristic(inst)
    assert json.loads(cs.validate(inst, heur))["valid"]

    model = cs.GnnModel.random(num_blocks=2, num_heads=2, hidden_dim=8, seed=3)
    assert cs.GnnModel.from_bytes(model.to_bytes()).to_bytes() == model.to_bytes()
    assert len(model.forward(inst)) == 3
    for g in cs.generate(20, node_range=(2, 8), tag_range=(1, 10), seed=1):
        sched = model.schedule(g, policy="heuristic_fallback")
        carriers, length, _ = cs.schedule_cost(g, sched)
        assert carriers >= length
        assert json.loads(cs.validate(g, sched))["valid"]

    lone = cs.Instance(1, [], [(1, 0)])
    try:
        cs.solve_optimal(lone)
    except cs.ScheduleFailure as e:
        assert e.args[0] == "infeasible"
    else:
        raise AssertionError("isolated host must be infeasible")

    assert abs(cs.avg_energy_per_tag(7, 7) - 1.66026e-3) <= 1e-9
    print("smoke test passed")


if __name__ == "__main__":
    main()
