from drfpca.manifold.stiefel import (
    RETRACTIONS,
    StiefelPoint,
    TangentVector,
    get_retraction,
    orthonormality_residual,
    project_tangent,
    random_point,
    retract_polar,
    retract_qf,
    tangency_residual,
)
