"""carpenter: constructive projections with prescribed diagonals.

Diagonal sequences are given exactly (rational prefix + closed tail rule);
the package decides whether an orthogonal projection with that diagonal
exists, builds one when it does, and verifies the result.  Finite fields of
diagonals and sampled shift-invariant spectral data ride on the same engine.
"""

from .errors import (
    CarpenterError,
    ConstructionError,
    ExactnessError,
    InfeasibleDiagonalError,
    MajorizationError,
    OutOfRangeError,
    PartitionError,
    SpecError,
    UnsupportedStructureError,
)
from .feasibility import (
    BranchLabel,
    FeasibilityReport,
    branch_of,
    branch_partition,
    classify,
    kadison_ab,
)
from .schurhorn import (
    finite_projection,
    finite_projection_pair,
    intertwining_unitary,
    majorizes,
    schur_horn_unitary,
)
from .selector import (
    NecessityReport,
    ProjectionField,
    VerificationReport,
    carpenter,
    carpenter_field,
    necessity_oracle,
    verify_projection,
)
from .seqcore import (
    INF,
    AffineEmbedding,
    CellField,
    DiagonalSpec,
    ListShiftEmbedding,
    PermutationWindow,
    ProjectionRep,
    SparseVector,
    SqrtTail,
    TailRule,
    conjugate_by_permutation,
    diag_of,
    dumps_canonical,
    glue,
    rat,
)
from .sispectral import (
    RangeFunctionFile,
    SpectralFiber,
    SpectralSamples,
    check_spectral,
    extract_spectral,
    synthesize_range,
)
from .summable import (
    DecouplingPlan,
    decouple,
    positions_proper,
    proper_subspec,
    rank_one,
    split_small_large,
    summable_construct,
    summable_construct2,
)
from .tetris import (
    MinSTable,
    TetrisOutput,
    block_sort,
    coupling,
    interleave_split_fin,
    interleave_split_inf,
    min_s,
    nonsummable_construct,
    positions,
    sort_desc_window,
    tetris_vectors,
)

__version__ = "0.1.0"
