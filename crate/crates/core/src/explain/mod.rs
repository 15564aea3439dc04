//! Feature correlation and Shapley attribution for forests, with CSV and
//! SVG exports.

mod pearson;
mod shap;
mod svg;

pub use pearson::{pearson_matrix, CorrelationMatrix};
pub use shap::{
    expected_value, shap_bruteforce, shap_summary, shap_table, summary_to_csv, top_k_share,
    treeshap, FeatureAttribution, ShapReport, ShapRow, BRUTEFORCE_MAX_FEATURES, SHAP_HEADER,
};
pub use svg::{correlation_heatmap_svg, metrics_bar_svg, shap_strip_svg, SvgOptions};
