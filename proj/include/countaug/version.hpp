// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace countaug {

inline constexpr const char* kToolVersion = "countaug 0.1.0";

}  // namespace countaug
