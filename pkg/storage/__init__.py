from storage.matrix_file import load_matrix, save_matrix
from storage.tracks_file import load_labels, load_tracks, save_labels, save_tracks, companion_labels_path
from storage.reports import write_json_report

__all__ = [
    'load_matrix',
    'save_matrix',
    'load_tracks',
    'save_tracks',
    'load_labels',
    'save_labels',
    'companion_labels_path',
    'write_json_report',
]
