"""Smoke test for the netgeom_py extension module."""

import netgeom_py as ng


def main():
    grid = ng.Space("kind=grid dims=16x16")
    assert len(grid) == 256
    assert grid.distance(0, 17) == "2"
    assert grid.ball_card(0, "2.5", "closed") == 6
    assert grid.verify_metric(samples=500)[0]

    net = ng.Net(grid, 2)
    assert net.check(grid)
    assert net.covering_radius == "1"
    sandwich = net.sandwich(grid, sources=16)
    assert sandwich["passed"] == "true", sandwich

    tri = ng.Space.from_lower_triangle([[], ["1"], ["1", "1/2"]])
    assert tri.diameter() == "1"

    big = ng.Space("kind=grid dims=64x64")
    fit = ng.growth(big, "2.5,4.5,8.5,12.5")
    assert abs(float(fit["lambda"]) - 2.0) < 0.1, fit

    counting = ng.Measure.load("counting:1", grid)
    report = ng.ahlfors(grid, counting, "2,4", 2.0, ball="closed", targets=(1.0, 4.0))
    assert report["passed"] == "true", report

    nu = ng.Measure(["1/2", "1/3", "1/6", "1"])
    assert nu.total() == "2"
    q = nu.quantize(5)
    assert q["passed"] == "true", q

    tree = ng.Space("kind=tree depth=6 branching=2 base=3")
    levels = ng.hausdorff(tree, 0.6309, ["1/3", "1/9", "1/27"])
    assert [size for _, size, _ in levels] == [2, 4, 8]

    summary, edges, projection = ng.regularize(2, [(0, 1)], k=5)
    assert summary["passed"] == "true", summary
    assert len(projection) == 16

    passed, text = ng.pipeline('space = "kind=grid dims=32x32"\ndelta = "2"\nradii = "4.5,6.5,8.5"\n')
    assert passed, text

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
