//! Web APIs whose use is classified as fingerprinting.

use std::collections::BTreeSet;

/// `Interface.member` names; getters carry a `.get` suffix.
pub const FINGERPRINT_APIS: [&str; 39] = [
    "CanvasRenderingContext2D.measureText",
    "HTMLCanvasElement.toDataURL",
    "MediaDevices.enumerateDevices",
    "Navigator.appCodeName.get",
    "Navigator.appName.get",
    "Navigator.appVersion.get",
    "Navigator.bluetooth.get",
    "Navigator.brave.get",
    "Navigator.deviceMemory.get",
    "Navigator.doNotTrack.get",
    "Navigator.getBattery",
    "Navigator.globalPrivacyControl.get",
    "Navigator.hardwareConcurrency.get",
    "Navigator.language.get",
    "Navigator.languages.get",
    "Navigator.maxTouchPoints.get",
    "Navigator.mediaCapabilities.get",
    "Navigator.mediaDevices.get",
    "Navigator.plugins.get",
    "Navigator.productSub.get",
    "Navigator.usb.get",
    "Navigator.userAgent.get",
    "Navigator.userAgentData.get",
    "Navigator.vendor.get",
    "Navigator.vendorSub.get",
    "Screen.availHeight.get",
    "Screen.availLeft.get",
    "Screen.availTop.get",
    "Screen.availWidth.get",
    "Screen.colorDepth.get",
    "Screen.height.get",
    "Screen.isExtended.get",
    "Screen.pixelDepth.get",
    "Screen.width.get",
    "WebGL2RenderingContext.getExtension",
    "WebGL2RenderingContext.getParameter",
    "WebGLRenderingContext.getExtension",
    "WebGLRenderingContext.getParameter",
    "WebGLRenderingContext.getShaderPrecisionFormat",
];

/// Exact-match membership over API names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FingerprintApiTable {
    names: BTreeSet<String>,
}

impl Default for FingerprintApiTable {
    fn default() -> Self {
        FingerprintApiTable::new(FINGERPRINT_APIS)
    }
}

impl FingerprintApiTable {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        FingerprintApiTable {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, api: &str) -> bool {
        self.names.contains(api)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
