/* Copyright 2026 The jsaloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef JSALOC_LOG_H_
#define JSALOC_LOG_H_

#include <atomic>
#include <iostream>
#include <string>

namespace jsaloc {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

inline std::atomic<LogLevel>& GlobalLogLevel() {
  static std::atomic<LogLevel> level{LogLevel::kWarning};
  return level;
}

inline void LogWarning(const std::string& message) {
  if (GlobalLogLevel().load() >= LogLevel::kWarning) {
    std::cerr << "[jsaloc warning] " << message << "\n";
  }
}

inline void LogInfo(const std::string& message) {
  if (GlobalLogLevel().load() >= LogLevel::kInfo) {
    std::cerr << "[jsaloc] " << message << "\n";
  }
}

}  // namespace jsaloc

#endif  // JSALOC_LOG_H_
