use crate::error::{Error, Result};
use crate::model::{Label, Size};

/// Per-pixel semantic labels, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMask {
    size: Size,
    labels: Vec<Label>,
}

impl SegMask {
    pub fn filled(size: Size, label: Label) -> Self {
        SegMask {
            size,
            labels: vec![label; size.area()],
        }
    }

    pub fn from_labels(size: Size, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != size.area() {
            return Err(Error::invalid(format!(
                "mask of size {size} needs {} labels, got {}",
                size.area(),
                labels.len()
            )));
        }
        Ok(SegMask { size, labels })
    }

    /// Builds a mask from raw label codes, rejecting codes outside 0..=5.
    pub fn from_codes(size: Size, codes: &[u8]) -> Result<Self> {
        let labels = codes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Label::from_code(c).ok_or_else(|| {
                    Error::invalid(format!(
                        "label code {c} at pixel ({}, {}) is not in 0..=5",
                        i % size.width.max(1) as usize,
                        i / size.width.max(1) as usize
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SegMask::from_labels(size, labels)
    }

    pub fn size(&self) -> Size {
        self.size
    }

    pub fn width(&self) -> u32 {
        self.size.width
    }

    pub fn height(&self) -> u32 {
        self.size.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn codes(&self) -> Vec<u8> {
        self.labels.iter().map(|l| l.code()).collect()
    }

    pub fn get(&self, x: u32, y: u32) -> Label {
        self.labels[y as usize * self.size.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, label: Label) {
        self.labels[y as usize * self.size.width as usize + x as usize] = label;
    }

    /// Pixel counts indexed by label code.
    pub fn counts(&self) -> [usize; 6] {
        let mut c = [0usize; 6];
        for l in &self.labels {
            c[*l as usize] += 1;
        }
        c
    }

    /// Semantic labels with at least one pixel, in code order.
    pub fn present_labels(&self) -> Vec<Label> {
        let c = self.counts();
        Label::SEMANTIC.into_iter().filter(|l| c[*l as usize] > 0).collect()
    }

    pub(crate) fn check_same_size(&self, other: &SegMask) -> Result<()> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch {
                left_w: self.size.width,
                left_h: self.size.height,
                right_w: other.size.width,
                right_h: other.size.height,
            });
        }
        Ok(())
    }
}
