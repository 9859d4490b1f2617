"""SVG figures: class-colored embeddings with Voronoi regions, and variance curves."""
import logging
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

import config  # noqa: E402
from analysis import Embedding, assign_to_sites  # noqa: E402
from dataset import CentroidSet  # noqa: E402

logger = logging.getLogger(__name__)

# Same SVG bytes for the same figure: fixed element ids, no timestamp, text kept as text.
plt.rcParams['svg.hashsalt'] = config.SVG_HASH_SALT
plt.rcParams['svg.fonttype'] = 'none'

REGION_RESOLUTION = 300


def class_colors(n_classes: int) -> np.ndarray:
    """RGBA color per class index; class j always gets the same color."""
    palette = plt.get_cmap('tab10' if n_classes <= 10 else 'tab20')
    return np.array([palette(j % palette.N) for j in range(n_classes)])


def _save(fig, path: str):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info("Wrote %s", path)


def embedding_svg(embedding: Embedding, class_names: Sequence[str], path: str,
                  sites: Optional[CentroidSet] = None, title: str = ''):
    """Scatter a 2-D embedding colored by class, with Voronoi regions of `sites`.

    Args:
        embedding: 2-D points and labels
        class_names: Display name per class index
        path: Output SVG path
        sites: Per-class sites; regions are shaded by nearest site
        title: Figure title
    """
    colors = class_colors(len(class_names))
    points = embedding.points
    fig, ax = plt.subplots(figsize=(7, 6))

    if sites is not None:
        corners = np.vstack([points, sites.centroids])
        lo, hi = corners.min(axis=0), corners.max(axis=0)
        pad = 0.05 * np.maximum(hi - lo, 1e-9)
        lo, hi = lo - pad, hi + pad
        gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], REGION_RESOLUTION),
                             np.linspace(lo[1], hi[1], REGION_RESOLUTION))
        regions = assign_to_sites(sites, np.column_stack([gx.ravel(), gy.ravel()]))
        ax.imshow(regions.reshape(gx.shape), origin='lower', extent=(lo[0], hi[0], lo[1], hi[1]),
                  cmap=ListedColormap(colors), vmin=-0.5, vmax=len(class_names) - 0.5,
                  alpha=0.15, interpolation='nearest', aspect='auto')

    for j, name in enumerate(class_names):
        members = embedding.labels == j
        if members.any():
            ax.scatter(points[members, 0], points[members, 1], s=6, color=colors[j], label=str(name))

    if sites is not None:
        ax.scatter(sites.centroids[:, 0], sites.centroids[:, 1], s=90, marker='X',
                   c=colors[:sites.centroids.shape[0]], edgecolors='black', linewidths=1.0)

    ax.set_xlabel('y1')
    ax.set_ylabel('y2')
    if title:
        ax.set_title(title)
    ax.legend(loc='best', fontsize='small', markerscale=2)
    _save(fig, path)


def variance_svg(curves: Dict[str, Sequence[float]], path: str, title: str = ''):
    """Plot cumulative variance fraction against dimension for each named curve."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for name, curve in curves.items():
        ax.plot(np.arange(1, len(curve) + 1), 100.0 * np.asarray(curve), label=name)
    ax.set_xlabel('Number of dimensions')
    ax.set_ylabel('% of variance captured')
    ax.set_ylim(0, 100)
    if title:
        ax.set_title(title)
    ax.legend(loc='lower right')
    _save(fig, path)
