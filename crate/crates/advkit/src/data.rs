//! Dataset construction: seeded synthetic mixtures, IDX file ingestion,
//! and train/test splitting. Every feature lands in `[0, 1]`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Labeled classification data with features normalized to `[0, 1]`.
///
/// Construction enforces the invariants: one label per row, every label
/// below `class_count`, every feature inside the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Tensor,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    /// Builds a dataset, validating shape, label range, and feature domain.
    pub fn new(features: Tensor, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.shape().len() != 2 {
            return Err(Error::Argument(format!(
                "features must be rank 2 (n x d), got shape {:?}",
                features.shape()
            )));
        }
        if features.shape()[0] != labels.len() {
            return Err(Error::Argument(format!(
                "{} feature rows but {} labels",
                features.shape()[0],
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Argument(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        if let Some(&bad) = features
            .data()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::Argument(format!(
                "feature value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            features,
            labels,
            class_count,
        })
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features.shape()[1]
    }

    /// Features of example `i` as a borrowed slice.
    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Features of example `i` as an owned rank-1 tensor.
    pub fn example(&self, i: usize) -> Tensor {
        Tensor::from_vec(self.row(i).to_vec())
    }

    /// Label of example `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// New dataset holding the selected examples, in the given order.
    /// Class count is preserved.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Argument(format!(
                    "index {i} out of range for {} examples",
                    self.len()
                )));
            }
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(
            Tensor::new(vec![indices.len(), d], data)?,
            labels,
            self.class_count,
        )
    }
}

/// Deterministic synthetic multi-class data: class means drawn uniformly in
/// `[0.2, 0.8]^d`, points scattered around them with per-coordinate Gaussian
/// noise of standard deviation `spread`, then clipped into `[0, 1]`.
///
/// Examples are laid out class by class: labels run `0,0,...,1,1,...`.
pub fn gen_gaussian_mixture(
    classes: usize,
    d: usize,
    n_per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if d < 2 {
        return Err(Error::Argument(format!(
            "need feature dimension of at least 2, got {d}"
        )));
    }
    if !(spread > 0.0) {
        return Err(Error::Argument(format!("spread must be positive, got {spread}")));
    }
    if n_per_class == 0 {
        return Err(Error::Argument(
            "n_per_class must be at least 1".to_string(),
        ));
    }

    let mut rng = RngStream::new(seed);
    let mut means = Vec::with_capacity(classes);
    for _ in 0..classes {
        let m: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.2, 0.8)).collect();
        means.push(m);
    }

    let n = classes * n_per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..n_per_class {
            for &mu in mean {
                let v = mu + spread * rng.next_gaussian();
                data.push(v.max(0.0).min(1.0));
            }
            labels.push(c);
        }
    }
    Dataset::new(Tensor::new(vec![n, d], data)?, labels, classes)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    let slice = bytes
        .get(offset..end)
        .ok_or_else(|| Error::Malformed(format!("file too short to hold {what}")))?;
    Ok(u32::from_be_bytes(slice.try_into().expect("4-byte slice")))
}

/// Loads an image/label pair of IDX-format files (big-endian: magic, then
/// 32-bit dimensions, then unsigned bytes). Pixel value `v` becomes the
/// feature `v / 255`; the class count is one more than the largest label.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = std::fs::read(images_path)
        .map_err(|e| Error::Io(format!("{}: {e}", images_path.display())))?;
    let labels = std::fs::read(labels_path)
        .map_err(|e| Error::Io(format!("{}: {e}", labels_path.display())))?;

    let magic = be_u32(&images, 0, "image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::IdxBadMagic {
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let magic = be_u32(&labels, 0, "label magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::IdxBadMagic {
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }

    let n_images = be_u32(&images, 4, "image count")? as usize;
    let rows = be_u32(&images, 8, "row count")? as usize;
    let cols = be_u32(&images, 12, "column count")? as usize;
    let n_labels = be_u32(&labels, 4, "label count")? as usize;

    if n_images != n_labels {
        return Err(Error::IdxCountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    if n_images == 0 {
        return Err(Error::Malformed("IDX files contain zero items".to_string()));
    }

    let d = rows * cols;
    let pixel_bytes = &images[16..];
    if pixel_bytes.len() != n_images * d {
        return Err(Error::Malformed(format!(
            "image payload holds {} bytes but {} items of {} pixels need {}",
            pixel_bytes.len(),
            n_images,
            d,
            n_images * d
        )));
    }
    let label_bytes = &labels[8..];
    if label_bytes.len() != n_labels {
        return Err(Error::Malformed(format!(
            "label payload holds {} bytes but header promises {}",
            label_bytes.len(),
            n_labels
        )));
    }

    let data: Vec<f64> = pixel_bytes.iter().map(|&v| f64::from(v) / 255.0).collect();
    let labels: Vec<usize> = label_bytes.iter().map(|&v| v as usize).collect();
    let class_count = 1 + *labels.iter().max().expect("nonempty labels");
    Dataset::new(Tensor::new(vec![n_images, d], data)?, labels, class_count)
}

/// Seeded shuffle-then-partition split. The test side receives
/// `round(test_fraction * n)` examples (kept within `1..=n-1` so neither
/// side is empty); together the two sides hold exactly the input multiset.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "cannot split a dataset of {n} examples into two nonempty parts"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = RngStream::new(seed);
    rng.shuffle(&mut indices);
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (test_idx, train_idx) = indices.split_at(n_test);
    Ok((data.select(train_idx)?, data.select(test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write as _;

    fn write_idx_pair(
        dir: &tempfile::TempDir,
        images: &[u8],
        labels: &[u8],
    ) -> (std::path::PathBuf, std::path::PathBuf) {
        let ipath = dir.path().join("images.idx");
        let lpath = dir.path().join("labels.idx");
        let mut f = std::fs::File::create(&ipath).unwrap();
        f.write_all(images).unwrap();
        let mut f = std::fs::File::create(&lpath).unwrap();
        f.write_all(labels).unwrap();
        (ipath, lpath)
    }

    fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        out.extend_from_slice(&count.to_be_bytes());
        out.extend_from_slice(&rows.to_be_bytes());
        out.extend_from_slice(&cols.to_be_bytes());
        out.extend_from_slice(pixels);
        out
    }

    fn idx_labels(count: u32, labels: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        out.extend_from_slice(&count.to_be_bytes());
        out.extend_from_slice(labels);
        out
    }

    #[test]
    fn dataset_rejects_label_out_of_range() {
        let f = Tensor::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            Dataset::new(f, vec![3], 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn dataset_rejects_feature_outside_unit_interval() {
        let f = Tensor::new(vec![1, 2], vec![0.5, 1.5]).unwrap();
        assert!(matches!(
            Dataset::new(f, vec![0], 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn mixture_is_deterministic_per_seed() {
        let a = gen_gaussian_mixture(3, 4, 5, 0.1, 99).unwrap();
        let b = gen_gaussian_mixture(3, 4, 5, 0.1, 99).unwrap();
        assert!(a.features().bits_eq(b.features()));
        assert_eq!(a.labels(), b.labels());
        let c = gen_gaussian_mixture(3, 4, 5, 0.1, 100).unwrap();
        assert!(!a.features().bits_eq(c.features()));
    }

    #[test]
    fn mixture_counts_and_label_layout() {
        let d = gen_gaussian_mixture(10, 2, 3, 0.1, 1).unwrap();
        assert_eq!(d.len(), 30);
        assert_eq!(d.class_count(), 10);
        for c in 0..10 {
            assert_eq!(d.labels().iter().filter(|&&l| l == c).count(), 3);
        }
    }

    #[test]
    fn mixture_rejects_invalid_arguments() {
        assert!(gen_gaussian_mixture(1, 4, 5, 0.1, 0).is_err());
        assert!(gen_gaussian_mixture(3, 1, 5, 0.1, 0).is_err());
        assert!(gen_gaussian_mixture(3, 4, 5, 0.0, 0).is_err());
        assert!(gen_gaussian_mixture(3, 4, 0, 0.1, 0).is_err());
    }

    #[test]
    fn idx_round_trip_normalization_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let images = idx_images(2, 1, 2, &[0, 255, 128, 51]);
        let labels = idx_labels(2, &[1, 0]);
        let (ip, lp) = write_idx_pair(&dir, &images, &labels);
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.row(0), &[0.0, 1.0]);
        assert_eq!(ds.row(1), &[128.0 / 255.0, 51.0 / 255.0]);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn idx_wrong_magic_is_distinct_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut images = idx_images(1, 1, 1, &[7]);
        images[3] = 0x04; // corrupt the images magic
        let labels = idx_labels(1, &[0]);
        let (ip, lp) = write_idx_pair(&dir, &images, &labels);
        match load_idx(&ip, &lp) {
            Err(Error::IdxBadMagic { expected, found }) => {
                assert_eq!(expected, 0x0000_0803);
                assert_eq!(found, 0x0000_0804);
            }
            other => panic!("expected bad-magic error, got {other:?}"),
        }
    }

    #[test]
    fn idx_count_mismatch_is_distinct_error() {
        let dir = tempfile::tempdir().unwrap();
        let images = idx_images(2, 1, 1, &[7, 8]);
        let labels = idx_labels(3, &[0, 1, 0]);
        let (ip, lp) = write_idx_pair(&dir, &images, &labels);
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(Error::IdxCountMismatch { images: 2, labels: 3 })
        ));
    }

    #[test]
    fn idx_truncated_payload_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let mut images = idx_images(2, 1, 2, &[1, 2, 3, 4]);
        images.pop(); // drop the last pixel byte
        let labels = idx_labels(2, &[0, 1]);
        let (ip, lp) = write_idx_pair(&dir, &images, &labels);
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Malformed(_))));
    }

    #[test]
    fn idx_missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("nope.idx");
        let lp = dir.path().join("also-nope.idx");
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Io(_))));
    }

    #[test]
    fn split_half_of_ten_is_five_five() {
        let ds = gen_gaussian_mixture(2, 2, 5, 0.1, 3).unwrap();
        let (train, test) = split(&ds, 0.5, 11).unwrap();
        assert_eq!(train.len(), 5);
        assert_eq!(test.len(), 5);
    }

    #[test]
    fn split_rejects_out_of_range_fraction() {
        let ds = gen_gaussian_mixture(2, 2, 5, 0.1, 3).unwrap();
        assert!(split(&ds, 0.0, 0).is_err());
        assert!(split(&ds, 1.0, 0).is_err());
        assert!(split(&ds, -0.3, 0).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let ds = gen_gaussian_mixture(3, 4, 10, 0.15, 5).unwrap();
        let (tr1, te1) = split(&ds, 0.25, 42).unwrap();
        let (tr2, te2) = split(&ds, 0.25, 42).unwrap();
        assert!(tr1.features().bits_eq(tr2.features()));
        assert!(te1.features().bits_eq(te2.features()));
        assert_eq!(tr1.labels(), tr2.labels());
        assert_eq!(te1.labels(), te2.labels());
    }

    proptest! {
        #[test]
        fn mixture_features_stay_in_unit_interval(
            seed in 0u64..1000,
            spread in 0.05f64..0.6,
        ) {
            let ds = gen_gaussian_mixture(3, 4, 8, spread, seed).unwrap();
            prop_assert!(ds.features().data().iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn split_conserves_the_multiset(
            seed in 0u64..500,
            frac in 0.1f64..0.9,
        ) {
            let ds = gen_gaussian_mixture(3, 3, 7, 0.2, 17).unwrap();
            let (train, test) = split(&ds, frac, seed).unwrap();
            prop_assert_eq!(train.len() + test.len(), ds.len());

            // Compare as multisets of (features, label) rows via sorted byte keys.
            let key = |d: &Dataset, i: usize| {
                let mut k: Vec<u64> = d.row(i).iter().map(|v| v.to_bits()).collect();
                k.push(d.label(i) as u64);
                k
            };
            let mut got: Vec<Vec<u64>> = (0..train.len())
                .map(|i| key(&train, i))
                .chain((0..test.len()).map(|i| key(&test, i)))
                .collect();
            let mut expect: Vec<Vec<u64>> = (0..ds.len()).map(|i| key(&ds, i)).collect();
            got.sort();
            expect.sort();
            prop_assert_eq!(got, expect);
        }
    }
}
