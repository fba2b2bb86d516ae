use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("mesh {0:?} has no triangles")]
    EmptyMesh(String),
    #[error("mesh {mesh:?}: triangle {triangle:?} indexes past {vertices} vertices")]
    IndexOutOfRange { mesh: String, triangle: [u32; 3], vertices: usize },
    #[error("mesh {0:?} has non-finite vertices")]
    NonFinite(String),
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown subject {0:?}")]
    UnknownSubject(String),
    #[error("subject {0:?} has no mesh")]
    MissingMesh(String),
    #[error("duplicate subject id {0:?}")]
    DuplicateSubject(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("subject {subject:?} {what} lies outside the workspace bounds: {detail}")]
    OutOfBounds { subject: String, what: &'static str, detail: String },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unsupported scene schema version {0}")]
    SchemaVersion(u32),
    #[error("malformed scene document: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("nothing to frame: the scene has no subjects with meshes")]
    NothingToFrame,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("unknown view {0:?}")]
    UnknownView(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("subject {0:?} is entirely behind the camera")]
    BehindCamera(String),
    #[error("malformed depth data: {0}")]
    Depth(String),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
