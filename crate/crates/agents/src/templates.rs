//! Versioned prompt templates. Each file has a `[system]` and a `[user]`
//! section; `{{scene_description}}` and `{{inputs}}` are substituted.

use crate::chat::{ChatMessage, ImageAttachment};

#[derive(Clone, Copy, Debug)]
pub struct Template {
    pub agent: &'static str,
    pub version: u32,
    source: &'static str,
}

pub const SUBJECT_EXTRACTOR: Template =
    Template { agent: "subject_extractor", version: 1, source: include_str!("../templates/subject_extractor.v1.txt") };
pub const BBOX_PLANNER: Template =
    Template { agent: "bbox_planner", version: 1, source: include_str!("../templates/bbox_planner.v1.txt") };
pub const ORIENTATION_ESTIMATOR: Template = Template {
    agent: "orientation_estimator",
    version: 1,
    source: include_str!("../templates/orientation_estimator.v1.txt"),
};
pub const TRANSFORM_PLANNER: Template =
    Template { agent: "transform_planner", version: 1, source: include_str!("../templates/transform_planner.v1.txt") };
pub const CAMERA_PICKER: Template =
    Template { agent: "camera_picker", version: 1, source: include_str!("../templates/camera_picker.v1.txt") };
pub const SUBJECT_EDITOR: Template =
    Template { agent: "subject_editor", version: 1, source: include_str!("../templates/subject_editor.v1.txt") };

pub const ALL: [Template; 6] =
    [SUBJECT_EXTRACTOR, BBOX_PLANNER, ORIENTATION_ESTIMATOR, TRANSFORM_PLANNER, CAMERA_PICKER, SUBJECT_EDITOR];

impl Template {
    fn sections(&self) -> (&'static str, &'static str) {
        let body = self.source.strip_prefix("[system]\n").expect("template starts with [system]");
        let (system, user) = body.split_once("\n[user]\n").expect("template has a [user] section");
        (system, user)
    }

    /// System and user messages for one call. `inputs` is pretty-printed
    /// into the user message's JSON block.
    pub fn messages(
        &self,
        scene_description: &str,
        inputs: &serde_json::Value,
        images: Vec<ImageAttachment>,
    ) -> Vec<ChatMessage> {
        let (system, user) = self.sections();
        let inputs = serde_json::to_string_pretty(inputs).expect("inputs serialize");
        let fill = |s: &str| s.replace("{{scene_description}}", scene_description.trim_end()).replace("{{inputs}}", &inputs);
        vec![ChatMessage::system(fill(system).trim_end()), ChatMessage::user(fill(user).trim_end(), images)]
    }
}
