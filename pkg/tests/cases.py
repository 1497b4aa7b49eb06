"""Small hand-written grid cases shared by the tests."""
from dcsc.caseio import Branch, Bus, BusType, Generator, GridCase

TWO_BUS = """\
function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
%% bus data
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	0	0	0	1	1	0	230	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	300	-300	1	100	1	100	0	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0	0.5	0	80	0	0	0	0	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.1	5	2;
];
"""


def grid(buses, branches, gens, base=100.0, name="toy") -> GridCase:
    """``buses``: (id, type, pd); ``branches``: (f, t, x, rate); ``gens``: (bus, pmin, pmax, (a, b, c))."""
    return GridCase(
        base, [Bus(i, BusType(t), pd) for i, t, pd in buses],
        [Branch(f, t, x, r) for f, t, x, r in branches],
        [Generator(b, lo, hi, cost) for b, lo, hi, cost in gens], name=name)


def triangle(rate=0.0, loads=(0.0, 0.0, 0.0), gens=None) -> GridCase:
    gens = gens or [(1, 0.0, 200.0, (0.01, 10.0, 0.0)), (2, 0.0, 200.0, (0.02, 12.0, 0.0))]
    return grid([(1, 3, loads[0]), (2, 2, loads[1]), (3, 1, loads[2])],
                [(1, 2, 1.0, rate), (2, 3, 1.0, rate), (1, 3, 1.0, rate)], gens, name="triangle")


def one_bus(pd=10.0, pmax=100.0, cost=(0.1, 5.0, 2.0)) -> GridCase:
    return grid([(1, 3, pd)], [], [(1, 0.0, pmax, cost)], name="one_bus")
