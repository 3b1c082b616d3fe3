import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Ten deterministic RGB images with mixed sizes and formats."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(42)
    for i in range(10):
        h, w = int(rng.integers(28, 80)), int(rng.integers(28, 80))
        a = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        suffix = ".png" if i % 2 == 0 else ".jpg"
        Image.fromarray(a).save(root / ("img_%02d%s" % (i, suffix)))
    return root


@pytest.fixture(scope="session")
def labels_csv(tmp_path_factory, image_dir):
    path = tmp_path_factory.mktemp("labels") / "labels.csv"
    rows = ["filename,label"]
    for i, img in enumerate(sorted(p.name for p in image_dir.iterdir())):
        rows.append("%s,class_%d" % (img, i % 3))
    path.write_text("\n".join(rows) + "\n")
    return path
