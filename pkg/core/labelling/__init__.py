"""
选择性标注模块 - 样例选择、标注者、簇标签传递、标签传播与多数投票
"""

from .labeller import Labeller
from .exemplars import (
    ExemplarSet, ap_refine_exemplars, mean_exemplars, random_exemplars,
)
from .assignment import LabelAssignment, assign_cluster_labels, majority_vote
from .propagation import LabelMatrix, LPParams, closed_form_propagation, propagate_labels

__all__ = [
    'Labeller',
    'ExemplarSet', 'ap_refine_exemplars', 'mean_exemplars', 'random_exemplars',
    'LabelAssignment', 'assign_cluster_labels', 'majority_vote',
    'LabelMatrix', 'LPParams', 'closed_form_propagation', 'propagate_labels',
]
