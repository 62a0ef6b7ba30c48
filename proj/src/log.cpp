#include "emos/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace emos::log {

namespace {

Level from_env() {
    const char* v = std::getenv("EMOS_LOG_LEVEL");
    if (!v) return Level::warn;
    const std::string s(v);
    if (s == "error") return Level::error;
    if (s == "info") return Level::info;
    if (s == "debug") return Level::debug;
    return Level::warn;
}

std::atomic<int>& current() {
    static std::atomic<int> l{static_cast<int>(from_env())};
    return l;
}

constexpr std::string_view kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level l) { current().store(static_cast<int>(l)); }
bool enabled(Level l) { return static_cast<int>(l) <= current().load(); }

void write(Level l, std::string_view message) {
    if (!enabled(l)) return;
    static std::mutex m;
    std::lock_guard lock(m);
    std::cerr << "[" << kNames[static_cast<int>(l)] << "] " << message << '\n';
}

}  // namespace emos::log
