from drfpca.service_function.experiment_app import ExperimentConfig, ExperimentController, GridResult
