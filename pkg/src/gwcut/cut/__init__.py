"""Cut-trees, their coupling, splitting laws and the timed fragmentation."""

from .cuttree import (
    EXTRA,
    CoupledCutTrees,
    TimedCutTree,
    coupled_cut_trees,
    coupled_from_clocks,
    cut_shape_law,
    edge_cut_tree,
    edge_from_clocks,
    edge_rates,
    draw_clocks,
    vertex_cut_tree,
    vertex_from_clocks,
    vertex_rates,
    mod_cut_tree,
    mod_from_clocks,
)
from .fragmentation import (
    CutDistances,
    FragmentationTrace,
    FragmentationReport,
    TAIL_LEVELS,
    cut_distances,
    fragmentation_rates,
    fragmentation_inequality_mc,
    timed_fragmentation,
    trace_from_clocks,
)
from .splitting import (
    FirstCutLaw,
    block_law,
    cut_tree_shape_law,
    first_cut_bruteforce,
    first_cut_formula,
    first_cut_law_exact,
    first_split_bruteforce,
    law_gap,
    mb_leaf_depth,
    mb_shape_law,
    mb_split_law,
    mb_split_sample,
    mb_tree_sample,
    split_probability,
)

__all__ = [
    "CoupledCutTrees",
    "CutDistances",
    "EXTRA",
    "FirstCutLaw",
    "FragmentationReport",
    "FragmentationTrace",
    "TAIL_LEVELS",
    "TimedCutTree",
    "block_law",
    "coupled_cut_trees",
    "coupled_from_clocks",
    "cut_distances",
    "cut_shape_law",
    "cut_tree_shape_law",
    "draw_clocks",
    "edge_cut_tree",
    "edge_from_clocks",
    "edge_rates",
    "first_cut_bruteforce",
    "first_cut_formula",
    "first_cut_law_exact",
    "first_split_bruteforce",
    "fragmentation_inequality_mc",
    "fragmentation_rates",
    "law_gap",
    "mb_leaf_depth",
    "mb_shape_law",
    "mb_split_law",
    "mb_split_sample",
    "mb_tree_sample",
    "mod_cut_tree",
    "mod_from_clocks",
    "split_probability",
    "timed_fragmentation",
    "trace_from_clocks",
    "vertex_cut_tree",
    "vertex_from_clocks",
    "vertex_rates",
]
