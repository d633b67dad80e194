"""Evaluation reports over trained channel models."""

from modred.evalkit.classifiers import CvResult, fit_logistic, knn_cv, knn_predict, logreg_cv
from modred.evalkit.embeddings import (
    cls_embedding,
    embed_records,
    embedding_frame,
    export_embeddings,
)
from modred.evalkit.folds import FoldSplit, make_folds
from modred.evalkit.reconstruction import (
    ReconMaeMatrix,
    recon_mae_report,
    reconstruction_traces,
)
from modred.evalkit.reports import (
    ReportSummary,
    summarize,
    write_channel_cv_csv,
    write_cv_csv,
    write_matrix_csv,
    write_summary,
)
from modred.evalkit.similarity import (
    SimilarityReport,
    cosine_sim,
    pearson_corr,
    similarity_report,
)


__all__ = [
    "CvResult",
    "FoldSplit",
    "ReconMaeMatrix",
    "ReportSummary",
    "SimilarityReport",
    "cls_embedding",
    "cosine_sim",
    "embed_records",
    "embedding_frame",
    "export_embeddings",
    "fit_logistic",
    "knn_cv",
    "knn_predict",
    "logreg_cv",
    "make_folds",
    "pearson_corr",
    "recon_mae_report",
    "reconstruction_traces",
    "similarity_report",
    "summarize",
    "write_channel_cv_csv",
    "write_cv_csv",
    "write_matrix_csv",
    "write_summary",
]
