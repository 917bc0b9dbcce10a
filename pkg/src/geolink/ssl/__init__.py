"""Self-supervised objectives, optimizer and training step."""
from .objectives import (
    LossReport, LossWeights, cst_adapter, loss_cont, loss_cst, loss_rec, retrieval_top1,
    similarity_logits, total_loss,
)
from .optim import adamw_step, lr_at
from .step import OptimConfig, compute_losses, draw_plans, train_step

__all__ = [
    "LossReport", "LossWeights", "OptimConfig", "adamw_step", "compute_losses", "cst_adapter",
    "draw_plans", "loss_cont", "loss_cst", "loss_rec", "lr_at", "retrieval_top1",
    "similarity_logits", "total_loss", "train_step",
]
