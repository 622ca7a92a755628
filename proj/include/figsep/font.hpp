// Copyright 2026 The figsep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace figsep {

/// Names of the embedded bitmap faces, indexable by `render_text`'s `face`.
const std::vector<std::string>& font_names();

/// Renders `text` with the embedded 5x8 bitmap font into an anti-aliased alpha
/// map (values in [0,1]) whose rows span `height_px`, trimmed to the inked extent.
/// Supports a-z, A-Z and parentheses; other characters render as blanks.
Eigen::MatrixXf render_text(std::string_view text, int face, int height_px);

}  // namespace figsep
