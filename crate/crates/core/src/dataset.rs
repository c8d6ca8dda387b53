//! Multi-view data model and its on-disk interchange format.
//!
//! A view file (`.fvb`) is the magic `FVB1`, then little-endian `u32` row
//! count and `u32` column count, then `rows * cols` little-endian `f32`
//! values in row-major order. A dataset directory holds one view file per
//! view plus a JSON manifest describing them.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FVB_MAGIC: &[u8; 4] = b"FVB1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One feature representation of the sample set: `N` rows, `d` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    data: Array2<f64>,
    pub extractor_name: String,
    pub layer_name: String,
}

impl ViewMatrix {
    pub fn new(data: Array2<f64>, extractor_name: impl Into<String>, layer_name: impl Into<String>) -> Result<Self> {
        let (n, d) = data.dim();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("view must be non-empty, got {n}x{d}")));
        }
        check_finite(data.view(), "view")?;
        Ok(ViewMatrix {
            data,
            extractor_name: extractor_name.into(),
            layer_name: layer_name.into(),
        })
    }

    /// Wraps a matrix with empty extractor/layer names.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        Self::new(data, "", "")
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}

pub(crate) fn check_finite(data: ArrayView2<'_, f64>, what: &str) -> Result<()> {
    for ((row, col), v) in data.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: what.to_string(),
                row,
                col,
            });
        }
    }
    Ok(())
}

/// Cluster assignment of `N` samples to labels `0..k`, every label used.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignments: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates that labels are exactly `0..k` with every label occurring.
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::invalid("partition must cover at least one sample"));
        }
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &a in &assignments {
            seen[a] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("label {missing} of 0..{k} has no member")));
        }
        Ok(Partition { assignments, k })
    }

    /// Builds a partition from arbitrary integer labels, renumbering them
    /// `0..k` in ascending order of the original values.
    pub fn from_labels<T: Ord + Copy>(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition must cover at least one sample"));
        }
        let distinct: Vec<T> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let assignments = labels
            .iter()
            .map(|l| distinct.binary_search(l).expect("label present"))
            .collect();
        Ok(Partition {
            assignments,
            k: distinct.len(),
        })
    }

    /// Renumbers labels in order of first appearance. Two partitions that
    /// differ only by relabeling canonicalize to the same value.
    pub fn canonical(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignments = self
            .assignments
            .iter()
            .map(|&a| {
                if map[a] == usize::MAX {
                    map[a] = next;
                    next += 1;
                }
                map[a]
            })
            .collect();
        Partition { assignments, k: self.k }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Members of each cluster in ascending sample order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &a) in self.assignments.iter().enumerate() {
            members[a].push(i);
        }
        members
    }
}

/// `M` aligned views of the same `N` samples, optionally with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: Option<Vec<usize>>,
    sample_ids: Vec<String>,
    /// Per-view feature extraction time in seconds, when the producer recorded it.
    extract_seconds: Vec<Option<f64>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<ViewMatrix>, labels: Option<Vec<usize>>, sample_ids: Option<Vec<String>>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::invalid("M must be ≥ 1"));
        };
        let n = first.n_samples();
        for (j, v) in views.iter().enumerate() {
            if v.n_samples() != n {
                return Err(Error::RowCountMismatch {
                    view: j,
                    expected: n,
                    found: v.n_samples(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: n,
                });
            }
        }
        let sample_ids = match sample_ids {
            Some(ids) if ids.len() != n => {
                return Err(Error::LengthMismatch { left: ids.len(), right: n });
            }
            Some(ids) => ids,
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        let extract_seconds = vec![None; views.len()];
        Ok(MultiViewDataset {
            views,
            labels,
            sample_ids,
            extract_seconds,
        })
    }

    /// Single-view convenience constructor.
    pub fn single(view: ViewMatrix, labels: Option<Vec<usize>>) -> Result<Self> {
        Self::new(vec![view], labels, None)
    }

    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn view(&self, j: usize) -> &ViewMatrix {
        &self.views[j]
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].n_samples()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Ground truth as a [`Partition`]; fails when the dataset is unlabeled.
    pub fn label_partition(&self) -> Result<Partition> {
        let labels = self
            .labels
            .as_deref()
            .ok_or_else(|| Error::invalid("dataset has no ground-truth labels"))?;
        Partition::from_labels(labels)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn extract_seconds(&self) -> &[Option<f64>] {
        &self.extract_seconds
    }

    pub fn set_extract_seconds(&mut self, view: usize, seconds: Option<f64>) {
        self.extract_seconds[view] = seconds;
    }

    /// Keeps only the listed views, in the given order.
    pub fn select_views(&self, indices: &[usize]) -> Result<MultiViewDataset> {
        let mut views = Vec::with_capacity(indices.len());
        let mut secs = Vec::with_capacity(indices.len());
        for &j in indices {
            let v = self
                .views
                .get(j)
                .ok_or_else(|| Error::invalid(format!("view index {j} out of range 0..{}", self.views.len())))?;
            views.push(v.clone());
            secs.push(self.extract_seconds[j]);
        }
        let mut ds = MultiViewDataset::new(views, self.labels.clone(), Some(self.sample_ids.clone()))?;
        ds.extract_seconds = secs;
        Ok(ds)
    }
}

/// Concatenates all views column-wise, view blocks in view order.
pub fn concatenate_views(ds: &MultiViewDataset) -> ViewMatrix {
    let n = ds.n_samples();
    let total: usize = ds.views.iter().map(ViewMatrix::dim).sum();
    let mut out = Array2::zeros((n, total));
    let mut offset = 0;
    for v in &ds.views {
        out.slice_mut(s![.., offset..offset + v.dim()]).assign(&v.data);
        offset += v.dim();
    }
    let names: Vec<&str> = ds.views.iter().map(|v| v.extractor_name.as_str()).collect();
    ViewMatrix {
        data: out,
        extractor_name: names.join("+"),
        layer_name: "concat".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestView {
    pub file: String,
    pub extractor: String,
    pub layer: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub views: Vec<ManifestView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_ids: Option<String>,
}

/// Writes one matrix as an `.fvb` file, narrowing every value to `f32`.
pub fn write_fvb(path: &Path, data: ArrayView2<'_, f64>) -> Result<()> {
    let (n, d) = data.dim();
    let rows = u32::try_from(n).map_err(|_| Error::invalid(format!("{n} rows exceed the u32 header")))?;
    let cols = u32::try_from(d).map_err(|_| Error::invalid(format!("{d} columns exceed the u32 header")))?;
    let mut buf = Vec::with_capacity(12 + n * d * 4);
    buf.extend_from_slice(FVB_MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for row in data.axis_iter(Axis(0)) {
        for &v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads an `.fvb` file, widening values to `f64`.
pub fn read_fvb(path: &Path) -> Result<Array2<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = [0u8; 12];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::format(path, "truncated header"))?;
    if &header[0..4] != FVB_MAGIC {
        return Err(Error::format(path, "bad magic, expected FVB1"));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::format(path, "header dimensions overflow"))?;
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, header {n}x{d} requires {expected}", payload.len()),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Array2::from_shape_vec((n, d), values).map_err(|e| Error::format(path, e.to_string()))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .collect()
}

/// Loads a dataset from its JSON manifest. Paths inside the manifest are
/// resolved relative to the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(manifest_path, e.to_string()))?;
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    if manifest.views.is_empty() {
        return Err(Error::format(manifest_path, "M must be ≥ 1"));
    }

    let mut views = Vec::with_capacity(manifest.views.len());
    for (j, entry) in manifest.views.iter().enumerate() {
        let path = base.join(&entry.file);
        let data = read_fvb(&path)?;
        if data.nrows() != manifest.n {
            return Err(Error::RowCountMismatch {
                view: j,
                expected: manifest.n,
                found: data.nrows(),
            });
        }
        if data.ncols() != entry.dim {
            return Err(Error::format(
                &path,
                format!("manifest declares dim {}, file has {}", entry.dim, data.ncols()),
            ));
        }
        check_finite(data.view(), &entry.file)?;
        views.push(ViewMatrix::new(data, entry.extractor.clone(), entry.layer.clone())?);
    }

    let labels = match &manifest.labels_file {
        Some(file) => {
            let path = base.join(file);
            let labels = read_lines(&path)?
                .iter()
                .map(|l| {
                    l.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::format(&path, format!("not a non-negative integer label: {l:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(labels)
        }
        None => None,
    };
    let sample_ids = match &manifest.sample_ids {
        Some(file) => Some(read_lines(&base.join(file))?),
        None => None,
    };

    let mut ds = MultiViewDataset::new(views, labels, sample_ids)?;
    for (j, entry) in manifest.views.iter().enumerate() {
        ds.extract_seconds[j] = entry.extract_seconds;
    }
    Ok(ds)
}

fn view_file_name(j: usize, v: &ViewMatrix) -> String {
    let tag: String = v
        .extractor_name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    if tag.is_empty() {
        format!("view{j:02}.fvb")
    } else {
        format!("view{j:02}_{tag}.fvb")
    }
}

/// Writes every view, the labels (if any), the sample ids and the manifest
/// into `dir`, returning the manifest path.
pub fn save_dataset(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    if ds.views.is_empty() {
        return Err(Error::invalid("M must be ≥ 1"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut entries = Vec::with_capacity(ds.views.len());
    for (j, v) in ds.views.iter().enumerate() {
        let file = view_file_name(j, v);
        write_fvb(&dir.join(&file), v.data())?;
        entries.push(ManifestView {
            file,
            extractor: v.extractor_name.clone(),
            layer: v.layer_name.clone(),
            dim: v.dim(),
            extract_seconds: ds.extract_seconds[j],
        });
    }

    let labels_file = match &ds.labels {
        Some(labels) => {
            let name = "labels.csv".to_string();
            let path = dir.join(&name);
            let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
            for l in labels {
                writeln!(w, "{l}").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            Some(name)
        }
        None => None,
    };

    let ids_name = "sample_ids.txt".to_string();
    let ids_path = dir.join(&ids_name);
    let mut ids = String::new();
    for id in &ds.sample_ids {
        ids.push_str(id);
        ids.push('\n');
    }
    fs::write(&ids_path, ids).map_err(|e| Error::io(&ids_path, e))?;

    let manifest = Manifest {
        n: ds.n_samples(),
        views: entries,
        labels_file,
        sample_ids: Some(ids_name),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn view(rows: usize, cols: usize, offset: f64) -> ViewMatrix {
        let data = Array2::from_shape_fn((rows, cols), |(i, j)| offset + (i * cols + j) as f64 * 0.25);
        ViewMatrix::new(data, format!("net{cols}"), "L3").unwrap()
    }

    #[test]
    fn manifest_with_two_views_loads() {
        let dir = tempfile::tempdir().unwrap();
        let ds = MultiViewDataset::new(vec![view(4, 3, 0.0), view(4, 5, 1.0)], Some(vec![0, 0, 1, 1]), None).unwrap();
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(&manifest).unwrap();
        assert_eq!(loaded.n_views(), 2);
        assert_eq!(loaded.n_samples(), 4);
        assert_eq!(loaded.labels(), Some(&[0, 0, 1, 1][..]));
        assert_eq!(loaded, ds);
    }

    #[test]
    fn row_count_mismatch_is_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        write_fvb(&dir.path().join("a.fvb"), view(4, 2, 0.0).data()).unwrap();
        write_fvb(&dir.path().join("b.fvb"), view(5, 2, 0.0).data()).unwrap();
        let manifest = r#"{"n": 4, "views": [
            {"file": "a.fvb", "extractor": "a", "layer": "L3", "dim": 2},
            {"file": "b.fvb", "extractor": "b", "layer": "L3", "dim": 2}]}"#;
        fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        let err = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap_err();
        assert!(matches!(err, Error::RowCountMismatch { view: 1, expected: 4, found: 5 }), "{err}");
        assert!(err.to_string().contains("row-count mismatch"));
    }

    #[test]
    fn nan_and_bad_header_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = Array2::<f64>::zeros((2, 2));
        data[[1, 0]] = f64::NAN;
        write_fvb(&dir.path().join("a.fvb"), data.view()).unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            r#"{"n": 2, "views": [{"file": "a.fvb", "extractor": "a", "layer": "L3", "dim": 2}]}"#,
        )
        .unwrap();
        let err = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0, .. }), "{err}");

        fs::write(dir.path().join("a.fvb"), b"FVB2\x02\0\0\0\x02\0\0\0").unwrap();
        let err = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");

        let err = load_dataset(&dir.path().join("missing.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn single_view_save_writes_one_view_file_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let ds = MultiViewDataset::single(view(3, 2, 0.0), None).unwrap();
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(manifest.file_name().unwrap(), MANIFEST_FILE);
        let fvbs: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "fvb"))
            .collect();
        assert_eq!(fvbs.len(), 1);
    }

    #[test]
    fn empty_view_list_is_rejected() {
        let err = MultiViewDataset::new(vec![], None, None).unwrap_err();
        assert!(err.to_string().contains("M must be ≥ 1"));
    }

    #[test]
    fn ten_views_keep_input_order() {
        let dir = tempfile::tempdir().unwrap();
        let views: Vec<_> = (1..=10).map(|d| view(3, d, d as f64)).collect();
        let ds = MultiViewDataset::new(views, None, None).unwrap();
        let manifest_path = save_dataset(&ds, dir.path()).unwrap();
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
        assert_eq!(manifest.views.len(), 10);
        let dims: Vec<usize> = manifest.views.iter().map(|v| v.dim).collect();
        assert_eq!(dims, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn concatenation_sums_dims_and_keeps_block_order() {
        let ds = MultiViewDataset::new(vec![view(2, 4, 0.0), view(2, 6, 0.0), view(2, 8, 0.0)], None, None).unwrap();
        assert_eq!(concatenate_views(&ds).dim(), 18);

        let single = MultiViewDataset::single(view(3, 2, 0.5), None).unwrap();
        assert_eq!(concatenate_views(&single).data(), single.view(0).data());

        let a = ViewMatrix::from_array(array![[1.0], [2.0]]).unwrap();
        let b = ViewMatrix::from_array(array![[3.0], [4.0]]).unwrap();
        let ds = MultiViewDataset::new(vec![a, b], None, None).unwrap();
        assert_eq!(concatenate_views(&ds).data(), array![[1.0, 3.0], [2.0, 4.0]]);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 2, 2]).is_err());
        let p = Partition::from_labels(&[7, 3, 7, 9]).unwrap();
        assert_eq!(p.assignments(), &[1, 0, 1, 2]);
        assert_eq!(p.k(), 3);
        assert_eq!(p.canonical().assignments(), &[0, 1, 0, 2]);
    }
}
