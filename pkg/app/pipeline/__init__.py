from app.pipeline.config import ExperimentConfig, DegreeConfig, GateConfig, load_config, dump_config
from app.pipeline.report import COLUMNS, ReportRow, report, report_rows, load_bundle, to_csv
from app.pipeline.workflow import STAGES, build_pipeline_graph, run_pipeline
