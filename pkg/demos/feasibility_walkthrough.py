"""Which diagonals belong to projections, and which constructor gets them."""

from carpenter.feasibility import branch_of, classify
from carpenter.seqcore import DiagonalSpec, TailRule

CASES = [
    ("constant 2/5 forever", DiagonalSpec.of(tail=TailRule.constant("2/5"))),
    ("constant 3/4 forever", DiagonalSpec.of(tail=TailRule.constant("3/4"))),
    ("five halves", DiagonalSpec.of(*["1/2"] * 5)),
    ("four halves", DiagonalSpec.of(*["1/2"] * 4)),
    ("lonely quarter", DiagonalSpec.of("1/4")),
    ("geometric crumbs", DiagonalSpec.of("3/4", "1/8", tail=TailRule.geometric("1/16", "1/2"))),
    ("climbing to one", DiagonalSpec.of("3/10", "1/5", tail=TailRule.one_minus_geometric("1/4", "1/2"))),
]

for name, spec in CASES:
    r = classify(spec)
    line = f"{name:22s} a={str(r.a):>5s}  b={str(r.b):>5s}  -> {r.verdict}"
    if r.feasible:
        line += "   via " + str(branch_of(spec))
    print(line)

# the defect sums tell the whole story: divergence on either side is enough,
# otherwise the difference must be a whole number
assert classify(DiagonalSpec.of(*["1/2"] * 5)).verdict == "infeasible"
assert classify(DiagonalSpec.of(*["1/2"] * 4)).verdict == "feasible"
print("\nodd half-counts fail, even ones pass -- exactly the integrality test")
