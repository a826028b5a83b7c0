from drfpca.data.dataset import (
    Dataset,
    GroupMoments,
    center,
    group_moments,
    load_csv,
    make_toy,
    save_csv,
    stratified_folds,
    stratified_split,
    subset,
)
