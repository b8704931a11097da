#include "ksv/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace ksv {

namespace {

std::atomic<int> g_threads{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};

}  // namespace

void set_thread_count(int threads) { g_threads.store(std::max(1, threads)); }

int thread_count() { return g_threads.load(); }

}  // namespace ksv
