from drfpca.metrics.fairness import (
    FairTestResult,
    FairnessReport,
    Projection,
    evaluate,
    expected_group_errors,
    fair_projection_test,
    nominal_pca,
    pairwise_fair_tests,
    reconstruction_loss,
    reconstruction_losses,
    sign_fix,
    unfairness_max,
)
