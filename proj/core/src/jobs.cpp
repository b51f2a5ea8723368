#include "storyecho/jobs.hpp"

#include <algorithm>
#include <cstdio>

namespace storyecho {

JobExecutor::JobExecutor(std::size_t parallelism) : parallelism_(std::max<std::size_t>(1, parallelism))
{
    for (std::size_t i = 0; i < parallelism_; ++i) {
        threads_.emplace_back([this] { worker(); });
    }
}

JobExecutor::~JobExecutor()
{
    wait_idle();
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

bool JobExecutor::finished(JobStatus status)
{
    return status == JobStatus::Succeeded || status == JobStatus::Failed ||
           status == JobStatus::AwaitingReview;
}

std::string JobExecutor::submit(Stage stage, std::string serial_key, Work work)
{
    std::string id;
    {
        std::lock_guard lock(mutex_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "job-%04llu", static_cast<unsigned long long>(next_id_++));
        id = buf;
        GenerationJob job;
        job.job_id = id;
        job.stage = stage;
        jobs_.emplace(id, job);
        queue_.push_back({id, std::move(serial_key), std::move(work)});
    }
    wake_.notify_one();
    return id;
}

std::optional<GenerationJob> JobExecutor::get(const std::string& job_id) const
{
    std::lock_guard lock(mutex_);
    if (auto it = jobs_.find(job_id); it != jobs_.end()) {
        return it->second;
    }
    return std::nullopt;
}

GenerationJob JobExecutor::wait(const std::string& job_id)
{
    std::unique_lock lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) {
        fail(Errc::NotFound, "job " + job_id);
    }
    done_.wait(lock, [&] { return finished(it->second.status); });
    return it->second;
}

void JobExecutor::wait_idle()
{
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return queue_.empty() && running_ == 0; });
}

std::size_t JobExecutor::peak_running() const
{
    std::lock_guard lock(mutex_);
    return peak_;
}

void JobExecutor::worker()
{
    std::unique_lock lock(mutex_);
    for (;;) {
        auto next = queue_.end();
        // Always recompute: a deque end() taken before a push/pop is stale.
        wake_.wait(lock, [&] {
            next = std::find_if(queue_.begin(), queue_.end(), [&](const Pending& p) {
                return !busy_keys_.count(p.serial_key);
            });
            return stopping_ || next != queue_.end();
        });
        if (stopping_ && next == queue_.end()) {
            return;
        }
        Pending item = std::move(*next);
        queue_.erase(next);
        busy_keys_.insert(item.serial_key);
        ++running_;
        peak_ = std::max(peak_, running_);
        GenerationJob job = jobs_.at(item.job_id);
        job.status = JobStatus::Running;
        jobs_[item.job_id] = job;
        lock.unlock();

        try {
            item.work(job);
            if (!finished(job.status)) {
                job.status = JobStatus::Succeeded;
            }
        } catch (const GenerationFailedError& e) {
            job.status = JobStatus::Failed;
            job.attempts = e.attempts();
            job.last_report = e.report();
            job.error_code = std::string(to_string(e.code()));
            job.error_detail = e.detail();
        } catch (const Error& e) {
            job.status = JobStatus::Failed;
            job.error_code = std::string(to_string(e.code()));
            job.error_detail = e.detail();
        } catch (const std::exception& e) {
            job.status = JobStatus::Failed;
            job.error_code = std::string(to_string(Errc::StorageError));
            job.error_detail = e.what();
        }

        lock.lock();
        jobs_[item.job_id] = job;
        busy_keys_.erase(item.serial_key);
        --running_;
        done_.notify_all();
        wake_.notify_all();
    }
}

} // namespace storyecho
