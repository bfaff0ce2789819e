"""Exact twisted perfect complexes on a finite soft site, with constructive Čech descent."""

from .bundle import DirectSum, GradedBundle, SheafMorphism, direct_sum, extend_by_zero, kernel_subbundle, restrict
from .cechdg import (
    GlobalComplex,
    HomCochain,
    NotClosedError,
    SheafCochain,
    TwistedComplex,
    act,
    compose,
    cone,
    delta_hom,
    delta_sheaf,
    global_hom_diff,
    hom_diff,
    identity_morphism,
    mc_residual,
    shift,
    shift_morphism,
    twist_morphism,
    twist_object,
)
from .exactla import GF, QQ, FieldMismatchError, Matrix, kernel_basis, parse_field, rank, rref, solve
from .globalize import (
    DescentDataModQ,
    DescentError,
    DescentResult,
    GlobalizationCertificate,
    descend_coboundary,
    descend_morphism,
    globalize,
    glue_modulo,
    higher_glue,
    roundtrip,
)
from .homology import hom_complex_cohomology, is_weak_equivalence, local_homology
from .site import PartitionOfUnity, Site, SiteError, build_nerve, default_partition, validate_site

__version__ = "0.1.0"
