use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("truncated data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("unsupported sample depth: maxval {0} exceeds 255")]
    UnsupportedDepth(u32),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("image {width}x{height} does not tile into {block_w}x{block_h} blocks")]
    Tiling {
        width: usize,
        height: usize,
        block_w: usize,
        block_h: usize,
    },

    #[error("reassembly error: expected {expected} vectors, got {found}")]
    Reassembly { expected: usize, found: usize },

    #[error(
        "no pyramid level of a {image_w}x{image_h} image yields exactly {codebook_size} \
         blocks of {block_w}x{block_h}"
    )]
    NoExactLevel {
        image_w: usize,
        image_h: usize,
        block_w: usize,
        block_h: usize,
        codebook_size: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    VersionMismatch(u16),

    #[error("invalid header: {0}")]
    BadHeader(String),

    #[error("length mismatch: header implies {expected} bytes, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for codebook of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with a description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with any context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by an unusable parameter combination rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::NoExactLevel { .. }
                | Error::Tiling { .. }
                | Error::Config(_)
                | Error::InsufficientData(_)
        )
    }
}
