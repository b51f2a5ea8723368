#pragma once

#include "storyecho/pipeline.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace storyecho {

// Background executor for generation jobs. At most `parallelism` jobs run at
// once, and jobs sharing a serial key (one per session) run one at a time in
// submission order.
class JobExecutor {
public:
    // The work mutates its own copy of the job (attempts, result_id, status)
    // and throws to fail it.
    using Work = std::function<void(GenerationJob&)>;

    explicit JobExecutor(std::size_t parallelism = 2);
    ~JobExecutor();

    JobExecutor(const JobExecutor&) = delete;
    JobExecutor& operator=(const JobExecutor&) = delete;

    std::string submit(Stage stage, std::string serial_key, Work work);
    std::optional<GenerationJob> get(const std::string& job_id) const;

    // Blocks until the job has finished (succeeded, awaiting review, failed).
    GenerationJob wait(const std::string& job_id);
    void wait_idle();

    std::size_t parallelism() const { return parallelism_; }
    // Highest number of jobs observed running at the same time.
    std::size_t peak_running() const;

private:
    struct Pending {
        std::string job_id;
        std::string serial_key;
        Work work;
    };

    void worker();
    static bool finished(JobStatus status);

    std::size_t parallelism_;
    mutable std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    std::deque<Pending> queue_;
    std::set<std::string> busy_keys_;
    std::map<std::string, GenerationJob> jobs_;
    std::size_t running_ = 0;
    std::size_t peak_ = 0;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

} // namespace storyecho
