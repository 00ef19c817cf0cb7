"""
Grid-search worker.

Runs a Celery worker that executes trials dispatched by
`main.py gridsearch --executor celery`, alongside a Prometheus metrics HTTP
server. Trials run in prefork child processes; set PROMETHEUS_MULTIPROC_DIR
so the server aggregates the children's metrics.
"""

import argparse
import logging
import sys
import threading
import time

import redis
from prometheus_client import CollectorRegistry, REGISTRY, multiprocess, start_http_server

from config import PROMETHEUS_MULTIPROC_DIR, PROMETHEUS_PORT, REDIS_URL
from observability import instrument_clients, setup_opentelemetry

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def check_broker(url: str = REDIS_URL) -> bool:
    try:
        return bool(redis.Redis.from_url(url, decode_responses=True).ping())
    except redis.RedisError as e:
        logger.error(f"Broker {url} unreachable: {e}")
        return False


def metrics_registry():
    if not PROMETHEUS_MULTIPROC_DIR:
        return REGISTRY
    registry = CollectorRegistry()
    multiprocess.MultiProcessCollector(registry)
    return registry


def start_metrics_server(port: int = PROMETHEUS_PORT):
    logger.info(f"Starting Prometheus metrics HTTP server on port {port}...")
    try:
        start_http_server(port, registry=metrics_registry())
        logger.info("Metrics server started successfully")
    except Exception as e:
        logger.exception(f"Failed to start metrics server: {e}")
        sys.exit(1)


def worker_argv(pool: str, concurrency: int, hostname: str):
    return [
        "worker",
        "--loglevel=info",
        f"--pool={pool}",
        f"--concurrency={concurrency}",
        f"--hostname={hostname}",
    ]


def start_celery_worker(pool: str, concurrency: int, hostname: str):
    # importing the app registers the trial task and the pipeline metrics
    from celery import signals

    from celery_app import celery

    @signals.worker_ready.connect
    def worker_ready(**kwargs):
        logger.info("Celery worker is ready to accept trials")

    @signals.worker_process_shutdown.connect
    def child_exit(pid=None, **kwargs):
        if PROMETHEUS_MULTIPROC_DIR and pid is not None:
            multiprocess.mark_process_dead(pid)

    if pool == "threads" and concurrency > 1:
        logger.warning("Keras trials share process-global state; the threads pool runs them one at a time")
    celery.worker_main(worker_argv(pool, concurrency, hostname))


def main(argv=None):
    parser = argparse.ArgumentParser(description="Grid-search trial worker")
    parser.add_argument("--concurrency", type=int, default=1,
                        help="Trials run at once; each holds a full model in memory")
    parser.add_argument("--pool", choices=["prefork", "solo", "threads"], default="prefork",
                        help="prefork runs each trial in its own process")
    parser.add_argument("--hostname", default="trials@%h")
    parser.add_argument("--metrics-port", type=int, default=PROMETHEUS_PORT)
    args = parser.parse_args(argv)

    if not check_broker():
        sys.exit(1)
    setup_opentelemetry()
    instrument_clients()

    metrics_thread = threading.Thread(target=start_metrics_server, args=(args.metrics_port,), daemon=True)
    metrics_thread.start()
    time.sleep(1)

    start_celery_worker(args.pool, args.concurrency, args.hostname)


if __name__ == "__main__":
    main()
