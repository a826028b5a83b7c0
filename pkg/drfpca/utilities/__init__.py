from drfpca.utilities.model_io import decode_matrix, dumps, encode_matrix, load_model, read_json, save_model, write_json
from drfpca.utilities.svg_plot import line_svg, pareto_svg
