// Three.js spatial viewer: merged context clouds, trace points, referents.

import * as THREE from "three";

import type { ApiClient } from "./api.js";
import { decimate } from "./decimate.js";
import { parseGlbPointCloud } from "./glb.js";
import { userShade } from "./colormap.js";
import type { SpatialVM } from "./viewmodels.js";

export class SpatialView {
  private renderer: THREE.WebGLRenderer | null = null;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private group = new THREE.Group();
  private yaw = -0.4;
  private pitch = 0.25;
  private distance = 7;
  private target = new THREE.Vector3(0, 1.2, 2);
  private loadedClouds = new Map<string, THREE.Points>();

  constructor(
    private canvas: HTMLCanvasElement,
    private api: ApiClient,
    private badge: HTMLElement,
  ) {
    this.camera = new THREE.PerspectiveCamera(55, 1, 0.01, 200);
    this.scene.background = new THREE.Color(0x10131a);
    this.scene.add(this.group);
    const grid = new THREE.GridHelper(12, 24, 0x2a3140, 0x1b212c);
    this.scene.add(grid);
    try {
      this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    } catch {
      this.renderer = null; // headless fallback: panel shows a placeholder
    }
    this.bindControls();
    this.resize();
    window.addEventListener("resize", () => this.resize());
    this.animate();
  }

  private bindControls(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("mousedown", (ev) => {
      dragging = true;
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (ev) => {
      if (!dragging) return;
      this.yaw -= (ev.clientX - lastX) * 0.005;
      this.pitch = Math.min(1.4, Math.max(-1.4, this.pitch + (ev.clientY - lastY) * 0.005));
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.distance = Math.min(40, Math.max(0.5, this.distance * (1 + ev.deltaY * 0.001)));
    });
  }

  private resize(): void {
    const w = this.canvas.clientWidth || 640;
    const h = this.canvas.clientHeight || 420;
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer?.setSize(w, h, false);
  }

  private animate = (): void => {
    requestAnimationFrame(this.animate);
    const cp = new THREE.Vector3(
      this.target.x + this.distance * Math.sin(this.yaw) * Math.cos(this.pitch),
      this.target.y + this.distance * Math.sin(this.pitch),
      this.target.z - this.distance * Math.cos(this.yaw) * Math.cos(this.pitch),
    );
    this.camera.position.copy(cp);
    this.camera.lookAt(this.target);
    this.renderer?.render(this.scene, this.camera);
  };

  async update(vm: SpatialVM): Promise<void> {
    this.group.clear();

    // Trace points: per-user color shades, sized by visit count.
    for (const p of vm.points) {
      const geom = new THREE.SphereGeometry(p.size, 10, 10);
      const mat = new THREE.MeshBasicMaterial({
        color: new THREE.Color(userShade(p.color.userIndex, p.color.actionIndex)),
      });
      const mesh = new THREE.Mesh(geom, mat);
      mesh.position.set(p.pos[0], p.pos[1], p.pos[2]);
      this.group.add(mesh);
    }

    // Context clouds and referent models, streamed and decimated.
    let total = 0;
    let shown = 0;
    let anyDecimated = false;
    const cloudUrls = [
      ...vm.cloudUrls,
      ...vm.referents.map((r) => r.url),
    ];
    for (const url of cloudUrls) {
      try {
        let points = this.loadedClouds.get(url);
        if (!points) {
          const raw = parseGlbPointCloud(await this.api.assetBytes(url));
          const { cloud, info } = decimate(raw);
          total += info.total;
          shown += info.shown;
          anyDecimated = anyDecimated || info.decimated;
          const geom = new THREE.BufferGeometry();
          geom.setAttribute("position", new THREE.BufferAttribute(cloud.positions, 3));
          geom.setAttribute(
            "color",
            new THREE.BufferAttribute(new Float32Array(cloud.colors).map((v) => v / 255), 3),
          );
          points = new THREE.Points(
            geom,
            new THREE.PointsMaterial({ size: 0.02, vertexColors: true }),
          );
          this.loadedClouds.set(url, points);
        }
        this.group.add(points);
      } catch (e) {
        const placeholder = new THREE.Mesh(
          new THREE.BoxGeometry(0.1, 0.1, 0.1),
          new THREE.MeshBasicMaterial({ color: 0x884444, wireframe: true }),
        );
        this.group.add(placeholder);
        console.warn(`asset load failed for ${url}`, e);
      }
    }
    this.badge.textContent = anyDecimated
      ? `decimated: ${shown.toLocaleString()} of ${total.toLocaleString()} points`
      : "";
  }
}
